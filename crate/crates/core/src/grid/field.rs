use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FftNd, GridSpec};
use crate::error::{Error, Result};
use crate::numerics::pairwise_sum_by;

/// Real samples of a function on a [`GridSpec`], row-major over axes.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

/// Frequency-domain twin of a [`ScalarField`].
///
/// Coefficients are stored in FFT order along every axis: position `q`
/// holds frequency `signed_index(q)/(2l)`. They are scaled by `h^d` and
/// phase-corrected for the box origin, so that for a rapidly decaying `f`
/// the coefficient approximates the continuous transform `f̂(ξ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    spec: GridSpec,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument {
                arg: "values",
                reason: format!("non-finite sample at index {i}"),
            });
        }
        Ok(Self { spec, values })
    }

    pub(crate) fn from_vec_unchecked(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    /// Samples `f` at every lattice point.
    pub fn from_fn<F: FnMut(&[f64]) -> f64>(spec: GridSpec, mut f: F) -> Self {
        let mut x = vec![0.0; spec.d()];
        let values = (0..spec.len())
            .map(|i| {
                spec.point(i, &mut x);
                f(&x)
            })
            .collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination `f(a, b)` of two fields on the same grid.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &ScalarField, f: F) -> Result<Self> {
        self.spec.check_same(&other.spec)?;
        Ok(Self {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub(crate) fn add_scaled_in_place(&mut self, c: f64, other: &ScalarField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
    }

    /// Zero-extends the field to the box `[-factor·l, factor·l)^d` with the
    /// same spacing.
    pub fn embed(&self, factor: usize) -> Result<Self> {
        let factor = factor.max(1);
        let big = GridSpec::new(
            self.spec.d(),
            self.spec.n() * factor,
            self.spec.l() * factor as f64,
        )?;
        let shift = (big.n() - self.spec.n()) / 2;
        let mut values = vec![0.0; big.len()];
        let mut idx = vec![0usize; self.spec.d()];
        for (i, &v) in self.values.iter().enumerate() {
            self.spec.unravel(i, &mut idx);
            for a in idx.iter_mut() {
                *a += shift;
            }
            values[big.ravel(&idx)] = v;
        }
        Ok(Self { spec: big, values })
    }

    /// Restricts the field to the centred sub-box described by `spec`.
    pub fn crop_to(&self, spec: &GridSpec) -> Result<Self> {
        let same_h = (spec.h() - self.spec.h()).abs() <= 1e-12 * spec.h();
        if spec.d() != self.spec.d() || !same_h || spec.n() > self.spec.n() {
            return Err(Error::GridMismatch(format!(
                "cannot crop {:?} to {spec:?}",
                self.spec
            )));
        }
        let shift = (self.spec.n() - spec.n()) / 2;
        let mut idx = vec![0usize; spec.d()];
        let values = (0..spec.len())
            .map(|i| {
                spec.unravel(i, &mut idx);
                for a in idx.iter_mut() {
                    *a += shift;
                }
                self.values[self.spec.ravel(&idx)]
            })
            .collect();
        Ok(Self {
            spec: *spec,
            values,
        })
    }

    /// Discrete inner product `Σ f g h^d`.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        self.spec.check_same(&other.spec)?;
        let s = pairwise_sum_by(self.values.len(), &|i| self.values[i] * other.values[i]);
        Ok(s * self.spec.cell_volume())
    }

    /// Riemann-sum `L^p` norm `(Σ |f|^p h^d)^{1/p}`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }

    pub fn l2_norm(&self) -> f64 {
        let s = pairwise_sum_by(self.values.len(), &|i| self.values[i] * self.values[i]);
        (s * self.spec.cell_volume()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn forward_transform(&self) -> SpectralField {
        forward_transform(self)
    }

    pub fn to_file(&self) -> FieldFile {
        FieldFile {
            grid: GridFile {
                d: self.spec.d(),
                n: self.spec.n(),
                l: self.spec.l(),
            },
            values: self.values.clone(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file())?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: FieldFile = serde_json::from_str(&text)?;
        file.into_field()
    }
}

impl SpectralField {
    pub fn new(spec: GridSpec, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients, got {}",
                spec.len(),
                coeffs.len()
            )));
        }
        Ok(Self { spec, coeffs })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Spectral `ℓ²` norm `(Σ |F|² / (2l)^d)^{1/2}`, the Parseval twin of `‖f‖₂`.
    pub fn l2_norm(&self) -> f64 {
        let s = pairwise_sum_by(self.coeffs.len(), &|i| self.coeffs[i].norm_sqr());
        (s * self.spec.frequency_spacing().powi(self.spec.d() as i32)).sqrt()
    }

    /// Multiplies every coefficient by `m(ξ)`.
    pub fn apply_multiplier<F: Fn(&[f64]) -> Complex64>(&self, m: F) -> SpectralField {
        let mut xi = vec![0.0; self.spec.d()];
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                self.spec.frequency_point(i, &mut xi);
                c * m(&xi)
            })
            .collect();
        SpectralField {
            spec: self.spec,
            coeffs,
        }
    }

    /// Real part of the inverse transform together with the relative
    /// imaginary residue `‖Im‖₂/‖Re‖₂`.
    pub fn inverse_with_residue(&self) -> (ScalarField, f64) {
        let spec = self.spec;
        let mut data = self.coeffs.clone();
        apply_origin_phase(&spec, &mut data);
        FftNd::new(spec.n(), spec.d()).inverse(&mut data);
        let scale = 1.0 / (spec.len() as f64 * spec.cell_volume());
        let re: Vec<f64> = data.iter().map(|c| c.re * scale).collect();
        let im2 = pairwise_sum_by(data.len(), &|i| (data[i].im * scale).powi(2));
        let re2 = pairwise_sum_by(re.len(), &|i| re[i] * re[i]);
        let residue = if re2 > 0.0 {
            (im2 / re2).sqrt()
        } else if im2 > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        (ScalarField::from_vec_unchecked(spec, re), residue)
    }

    pub fn inverse_transform(&self) -> ScalarField {
        self.inverse_with_residue().0
    }
}

/// Spectral coefficients approximating `f̂` on the frequency lattice.
pub fn forward_transform(f: &ScalarField) -> SpectralField {
    let spec = *f.spec();
    let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftNd::new(spec.n(), spec.d()).forward(&mut data);
    let vol = spec.cell_volume();
    for c in data.iter_mut() {
        *c *= vol;
    }
    apply_origin_phase(&spec, &mut data);
    SpectralField { spec, coeffs: data }
}

pub fn inverse_transform(f: &SpectralField) -> Result<ScalarField> {
    Ok(f.inverse_transform())
}

/// The box starts at `-l`, so each coefficient picks up `e^{iπq} = (-1)^q`
/// per axis. The factor is its own inverse.
fn apply_origin_phase(spec: &GridSpec, data: &mut [Complex64]) {
    let mut idx = vec![0usize; spec.d()];
    for (i, c) in data.iter_mut().enumerate() {
        spec.unravel(i, &mut idx);
        let parity: i64 = idx.iter().map(|&q| spec.signed_index(q)).sum();
        if parity.rem_euclid(2) == 1 {
            *c = -*c;
        }
    }
}

/// Riemann-sum `L^p` norm, `(Σ |f|^p h^d)^{1/p}` for `1 ≤ p < ∞`.
pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument {
            arg: "p",
            reason: format!("exponent must lie in [1, ∞), got {p}"),
        });
    }
    let v = f.values();
    let s = if p == 2.0 {
        pairwise_sum_by(v.len(), &|i| v[i] * v[i])
    } else {
        pairwise_sum_by(v.len(), &|i| v[i].abs().powf(p))
    };
    Ok((s * f.spec().cell_volume()).powf(1.0 / p))
}

/// On-disk JSON form of a field: `{"grid": {"d", "n", "l"}, "values": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldFile {
    pub grid: GridFile,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridFile {
    pub d: usize,
    pub n: usize,
    pub l: f64,
}

impl FieldFile {
    pub fn into_field(self) -> Result<ScalarField> {
        let spec = GridSpec::new(self.grid.d, self.grid.n, self.grid.l)?;
        ScalarField::new(spec, self.values)
    }
}
