use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{GridSpec, ScalarField};
use crate::error::{Error, Result};
use crate::harmonics::SolidHarmonic;
use crate::numerics::pairwise_sum_by;

/// Largest fraction of `L²` energy allowed outside radius `l/2`.
pub const SUPPORT_LEAK_TOLERANCE: f64 = 1e-6;

/// Smooth, rapidly decaying stand-ins for Schwartz functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `exp(-|x|²/(2σ²))`.
    Gaussian { sigma: f64 },
    /// Gaussian centred at `center` (padded with zeros to length d).
    ShiftedGaussian { center: Vec<f64>, sigma: f64 },
    /// `P(x) exp(-|x|²/(2σ²))` with `P` in the polynomial text syntax.
    GaussianTimesPoly { sigma: f64, poly: String },
    /// Gaussian envelope times a seeded sum of plane waves with `|ξ| ≤ cutoff`.
    RandomBandLimited {
        sigma: f64,
        cutoff: f64,
        modes: usize,
        seed: u64,
    },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match self {
            TestFunction::Gaussian { .. } => "gaussian".into(),
            TestFunction::ShiftedGaussian { .. } => "shifted_gaussian".into(),
            TestFunction::GaussianTimesPoly { .. } => "gaussian_times_poly".into(),
            TestFunction::RandomBandLimited { seed, .. } => format!("random_band_limited_{seed}"),
        }
    }
}

/// Samples a test function on `spec`.
///
/// Fields leaking more than [`SUPPORT_LEAK_TOLERANCE`] of their energy
/// outside radius `l/2` are logged, or rejected when `strict` is set.
pub fn test_function(spec: &GridSpec, kind: &TestFunction, strict: bool) -> Result<ScalarField> {
    let d = spec.d();
    let field = match kind {
        TestFunction::Gaussian { sigma } => {
            let s = check_sigma(*sigma)?;
            ScalarField::from_fn(*spec, |x| gauss(x, s))
        }
        TestFunction::ShiftedGaussian { center, sigma } => {
            let s = check_sigma(*sigma)?;
            if center.len() > d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: center.len(),
                });
            }
            let mut c = center.clone();
            c.resize(d, 0.0);
            ScalarField::from_fn(*spec, |x| {
                let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                (-r2 / (2.0 * s * s)).exp()
            })
        }
        TestFunction::GaussianTimesPoly { sigma, poly } => {
            let s = check_sigma(*sigma)?;
            let p = SolidHarmonic::parse(poly, Some(d))?;
            ScalarField::from_fn(*spec, |x| p.evaluate_unchecked(x) * gauss(x, s))
        }
        TestFunction::RandomBandLimited {
            sigma,
            cutoff,
            modes,
            seed,
        } => {
            let s = check_sigma(*sigma)?;
            if !(*cutoff > 0.0) || *modes == 0 {
                return Err(Error::InvalidArgument {
                    arg: "cutoff",
                    reason: "need a positive cutoff and at least one mode".into(),
                });
            }
            let waves = plane_waves(d, *cutoff, *modes, *seed);
            ScalarField::from_fn(*spec, |x| {
                let sum: f64 = waves
                    .iter()
                    .map(|w| {
                        let phase: f64 = w.freq.iter().zip(x).map(|(a, b)| a * b).sum();
                        w.amp * (2.0 * std::f64::consts::PI * phase + w.phase).cos()
                    })
                    .sum();
                sum * gauss(x, s)
            })
        }
    };
    let leak = support_leak(&field);
    if leak > SUPPORT_LEAK_TOLERANCE {
        let radius = spec.l() / 2.0;
        if strict {
            return Err(Error::SupportViolation {
                radius,
                fraction: leak,
            });
        }
        log::warn!(
            "{} leaks {leak:.3e} of its energy outside radius {radius}",
            kind.name()
        );
    }
    Ok(field)
}

/// Fraction of the discrete `L²` energy of `f` outside radius `l/2`.
pub fn support_leak(f: &ScalarField) -> f64 {
    let spec = f.spec();
    let r2max = (spec.l() / 2.0).powi(2);
    let mut x = vec![0.0; spec.d()];
    let v = f.values();
    let total = pairwise_sum_by(v.len(), &|i| v[i] * v[i]);
    if total == 0.0 {
        return 0.0;
    }
    let outside: Vec<f64> = (0..v.len())
        .map(|i| {
            spec.point(i, &mut x);
            let r2: f64 = x.iter().map(|a| a * a).sum();
            if r2 > r2max {
                v[i] * v[i]
            } else {
                0.0
            }
        })
        .collect();
    crate::numerics::pairwise_sum(&outside) / total
}

fn check_sigma(sigma: f64) -> Result<f64> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(sigma)
    } else {
        Err(Error::InvalidArgument {
            arg: "sigma",
            reason: format!("width must be positive, got {sigma}"),
        })
    }
}

fn gauss(x: &[f64], s: f64) -> f64 {
    let r2: f64 = x.iter().map(|a| a * a).sum();
    (-r2 / (2.0 * s * s)).exp()
}

struct PlaneWave {
    freq: Vec<f64>,
    amp: f64,
    phase: f64,
}

fn plane_waves(d: usize, cutoff: f64, modes: usize, seed: u64) -> Vec<PlaneWave> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..modes)
        .map(|_| {
            let dir: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dir
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let radius = cutoff * rng.random::<f64>();
            PlaneWave {
                freq: dir.iter().map(|v| v / norm * radius).collect(),
                amp: rng.sample::<f64, _>(StandardNormal) / (modes as f64).sqrt(),
                phase: 2.0 * std::f64::consts::PI * rng.random::<f64>(),
            }
        })
        .collect()
}
