use super::{GridSpec, ScalarField};

/// Multilinear interpolation of a sampled field with zero extension.
///
/// Lattice nodes outside the box contribute zero, so the interpolant is
/// supported on `(-l - h, l)^d`.
pub struct Interpolator<'a> {
    spec: GridSpec,
    values: &'a [f64],
    strides: Vec<usize>,
}

impl<'a> Interpolator<'a> {
    pub fn new(f: &'a ScalarField) -> Self {
        let spec = *f.spec();
        let d = spec.d();
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * spec.n();
        }
        Self {
            spec,
            values: f.values(),
            strides,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Interpolated value at an arbitrary point of ℝ^d.
    pub fn sample(&self, pos: &[f64]) -> f64 {
        let d = self.spec.d();
        let n = self.spec.n() as i64;
        let inv_h = 1.0 / self.spec.h();
        let l = self.spec.l();
        let mut base = [0i64; super::MAX_DIMENSION];
        let mut frac = [0f64; super::MAX_DIMENSION];
        for i in 0..d {
            let u = (pos[i] + l) * inv_h;
            if !(u > -1.0 && u < n as f64) {
                return 0.0;
            }
            let b = u.floor();
            base[i] = b as i64;
            frac[i] = u - b;
        }
        let mut total = 0.0;
        'corner: for mask in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for i in 0..d {
                let up = (mask >> i) & 1 == 1;
                let idx = base[i] + up as i64;
                if idx < 0 || idx >= n {
                    continue 'corner;
                }
                w *= if up { frac[i] } else { 1.0 - frac[i] };
                flat += idx as usize * self.strides[i];
            }
            if w != 0.0 {
                total += w * self.values[flat];
            }
        }
        total
    }
}
