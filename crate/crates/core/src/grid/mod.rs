//! Periodic-box discretisation of functions on ℝ^d.
//!
//! A [`GridSpec`] describes the box `[-l, l)^d` sampled with `n` points per
//! axis. Spatial samples live in a [`ScalarField`]; their frequency-domain
//! twins in a [`SpectralField`], scaled so that coefficients approximate the
//! continuous transform `f̂(ξ) = ∫ f(x) e^{-2πi x·ξ} dx`.

mod fft;
mod field;
mod interp;
mod spectral;
mod test_functions;

pub use fft::FftNd;
pub use field::{
    forward_transform, inverse_transform, lp_norm, FieldFile, GridFile, ScalarField, SpectralField,
};
pub use interp::Interpolator;
pub use spectral::{default_pad, PaddedLattice};
pub use test_functions::{support_leak, test_function, TestFunction, SUPPORT_LEAK_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of lattice points `n^d` of a single grid.
pub const DEFAULT_POINT_BUDGET: usize = 1 << 24;

/// Largest supported ambient dimension.
pub const MAX_DIMENSION: usize = 6;

/// Uniform periodic grid on `[-l, l)^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    d: usize,
    n: usize,
    l: f64,
}

/// Builds a validated grid with the default point budget.
pub fn make_grid(d: usize, n: usize, l: f64) -> Result<GridSpec> {
    GridSpec::with_budget(d, n, l, DEFAULT_POINT_BUDGET)
}

impl GridSpec {
    pub fn new(d: usize, n: usize, l: f64) -> Result<Self> {
        make_grid(d, n, l)
    }

    pub fn with_budget(d: usize, n: usize, l: f64, budget: usize) -> Result<Self> {
        if !(1..=MAX_DIMENSION).contains(&d) {
            return Err(Error::InvalidGrid(format!(
                "dimension {d} outside 1..={MAX_DIMENSION}"
            )));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 8, got {n}"
            )));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive, got {l}"
            )));
        }
        let total = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
        if total > budget as u128 {
            return Err(Error::InvalidGrid(format!(
                "{n}^{d} = {total} points exceeds the budget of {budget}"
            )));
        }
        Ok(Self { d, n, l })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    /// Grid spacing `2l/n`.
    pub fn h(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    /// Total number of lattice points `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.d as i32)
    }

    /// Spacing of the frequency lattice, `1/(2l)`.
    pub fn frequency_spacing(&self) -> f64 {
        1.0 / (2.0 * self.l)
    }

    /// Coordinate of the `m`-th sample along any axis.
    pub fn coord(&self, m: usize) -> f64 {
        -self.l + m as f64 * self.h()
    }

    /// Signed frequency index for FFT-order position `q`.
    pub fn signed_index(&self, q: usize) -> i64 {
        signed_index(q, self.n)
    }

    /// Frequency of FFT-order position `q` along any axis.
    pub fn frequency(&self, q: usize) -> f64 {
        self.signed_index(q) as f64 * self.frequency_spacing()
    }

    /// Splits a row-major flat index into per-axis indices (last axis fastest).
    pub fn unravel(&self, mut flat: usize, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Spatial coordinates of the sample at `flat`.
    pub fn point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0usize; self.d];
        self.unravel(flat, &mut idx);
        for (o, &i) in out.iter_mut().zip(&idx) {
            *o = self.coord(i);
        }
    }

    /// Frequency vector of the coefficient at FFT-order position `flat`.
    pub fn frequency_point(&self, flat: usize, out: &mut [f64]) {
        let mut idx = vec![0usize; self.d];
        self.unravel(flat, &mut idx);
        for (o, &q) in out.iter_mut().zip(&idx) {
            *o = self.frequency(q);
        }
    }

    /// Euclidean diameter of the box, `2l√d`.
    pub fn diameter(&self) -> f64 {
        2.0 * self.l * (self.d as f64).sqrt()
    }

    pub(crate) fn same_geometry(&self, other: &GridSpec) -> bool {
        self.d == other.d && self.n == other.n && (self.l - other.l).abs() <= 1e-12 * self.l
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Maps FFT-order position `q` in `0..n` to its signed index in `-n/2..n/2`.
pub(crate) fn signed_index(q: usize, n: usize) -> i64 {
    if q < n / 2 {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_examples() {
        let g = make_grid(1, 1024, 20.0).unwrap();
        assert_eq!(g.h(), 0.0390625);
        let g = make_grid(3, 32, 8.0).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.len(), 32768);
    }

    #[test]
    fn guards() {
        assert!(matches!(make_grid(7, 16, 4.0), Err(Error::InvalidGrid(_))));
        assert!(make_grid(0, 16, 4.0).is_err());
        assert!(make_grid(2, 15, 4.0).is_err());
        assert!(make_grid(2, 6, 4.0).is_err());
        assert!(make_grid(2, 16, 0.0).is_err());
        assert!(
            make_grid(6, 32, 1.0).is_err(),
            "32^6 exceeds the default budget"
        );
        assert!(GridSpec::with_budget(2, 64, 1.0, 1000).is_err());
    }

    #[test]
    fn coordinates_and_frequencies() {
        let g = make_grid(2, 8, 2.0).unwrap();
        assert_eq!(g.coord(0), -2.0);
        assert_eq!(g.coord(7), 1.5);
        let freqs: Vec<i64> = (0..8).map(|q| g.signed_index(q)).collect();
        assert_eq!(freqs, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(g.frequency(1), 0.25);
        let mut idx = [0usize; 2];
        g.unravel(13, &mut idx);
        assert_eq!(idx, [1, 5]);
        assert_eq!(g.ravel(&idx), 13);
    }
}
