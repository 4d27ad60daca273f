use num_complex::Complex64;

use super::{signed_index, FftNd, GridSpec, ScalarField};
use crate::numerics::pairwise_sum_by;

/// Points-per-cube target used to pick the zero-padding factor.
const PAD_TARGET_POINTS: usize = 1 << 16;

/// Zero-padding factor for multiplier application on `spec`.
///
/// The largest power of two in `2..=16` keeping `(pad·n)^d` within 2^16
/// points, and never below 2.
pub fn default_pad(spec: &GridSpec) -> usize {
    let mut pad = 2;
    while pad < 16 && (2 * pad * spec.n()).pow(spec.d() as u32) <= PAD_TARGET_POINTS {
        pad *= 2;
    }
    pad
}

/// Zero-padded periodic lattice with the spacing of a source grid.
///
/// The source box occupies indices `0..n` of every axis of the larger
/// `np^d` cube, so periodic convolution on the padded cube reproduces
/// linear convolution on the box whenever `np ≥ 2n - 1`.
pub struct PaddedLattice {
    src: GridSpec,
    np: usize,
    fft: FftNd,
}

impl PaddedLattice {
    pub fn new(src: GridSpec, pad: usize) -> Self {
        Self::with_size(src, pad.max(1) * src.n())
    }

    /// Padded lattice with exactly `np` points per axis (`np ≥ n`).
    pub fn with_size(src: GridSpec, np: usize) -> Self {
        assert!(np >= src.n(), "padded lattice smaller than its source");
        Self {
            src,
            np,
            fft: FftNd::new(np, src.d()),
        }
    }

    pub fn source(&self) -> &GridSpec {
        &self.src
    }

    pub fn points_per_axis(&self) -> usize {
        self.np
    }

    pub fn len(&self) -> usize {
        self.np.pow(self.src.d() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.np == 0
    }

    pub fn fft(&self) -> &FftNd {
        &self.fft
    }

    pub(crate) fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = flat % self.np;
            flat /= self.np;
        }
    }

    /// Frequency vector at padded FFT position `flat`; spacing `1/(np·h)`.
    pub fn frequency_point(&self, flat: usize, idx: &mut [usize], out: &mut [f64]) {
        self.unravel(flat, idx);
        let df = 1.0 / (self.np as f64 * self.src.h());
        for (o, &q) in out.iter_mut().zip(idx.iter()) {
            *o = signed_index(q, self.np) as f64 * df;
        }
    }

    /// Signed lattice offset at padded position `flat`, in units of `h`.
    pub fn offset_index(&self, flat: usize, idx: &mut [usize], out: &mut [i64]) {
        self.unravel(flat, idx);
        for (o, &q) in out.iter_mut().zip(idx.iter()) {
            *o = signed_index(q, self.np);
        }
    }

    /// Forward FFT of `f` zero-extended to the padded cube.
    pub fn transform_field(&self, f: &ScalarField) -> Vec<Complex64> {
        let n = self.src.n();
        let d = self.src.d();
        let mut data = vec![Complex64::default(); self.len()];
        let mut idx = vec![0usize; d];
        for (i, &v) in f.values().iter().enumerate() {
            self.src.unravel(i, &mut idx);
            let flat = idx.iter().fold(0, |acc, &m| acc * self.np + m);
            data[flat] = Complex64::new(v, 0.0);
        }
        debug_assert!(n <= self.np);
        self.fft.forward(&mut data);
        data
    }

    /// Inverse FFT, crop to the source box, and report the relative
    /// imaginary residue of the cropped part.
    pub fn restore(&self, mut data: Vec<Complex64>) -> (ScalarField, f64) {
        self.fft.inverse(&mut data);
        let scale = 1.0 / self.len() as f64;
        let d = self.src.d();
        let mut idx = vec![0usize; d];
        let mut re = Vec::with_capacity(self.src.len());
        let mut im = Vec::with_capacity(self.src.len());
        for i in 0..self.src.len() {
            self.src.unravel(i, &mut idx);
            let flat = idx.iter().fold(0, |acc, &m| acc * self.np + m);
            re.push(data[flat].re * scale);
            im.push(data[flat].im * scale);
        }
        let re2 = pairwise_sum_by(re.len(), &|i| re[i] * re[i]);
        let im2 = pairwise_sum_by(im.len(), &|i| im[i] * im[i]);
        let residue = if re2 > 0.0 {
            (im2 / re2).sqrt()
        } else if im2 > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        (ScalarField::from_vec_unchecked(self.src, re), residue)
    }

    /// Applies the Fourier multiplier `m(ξ)` to the zero-extended field.
    pub fn apply<F: Fn(&[f64]) -> Complex64>(&self, f: &ScalarField, m: F) -> (ScalarField, f64) {
        let mut data = self.transform_field(f);
        let d = self.src.d();
        let mut idx = vec![0usize; d];
        let mut xi = vec![0.0; d];
        for (i, c) in data.iter_mut().enumerate() {
            self.frequency_point(i, &mut idx, &mut xi);
            *c *= m(&xi);
        }
        self.restore(data)
    }

    /// Applies a precomputed table of multiplier values (FFT order).
    pub fn apply_table(&self, f: &ScalarField, table: &[Complex64]) -> (ScalarField, f64) {
        assert_eq!(table.len(), self.len());
        let mut data = self.transform_field(f);
        for (c, m) in data.iter_mut().zip(table) {
            *c *= m;
        }
        self.restore(data)
    }
}
