//! Method of rotations: odd truncated Riesz transforms as sphere averages
//! of directional Hilbert transforms,
//! `R_j^t f = c(d,k) ∫_{S^{d-1}} ω_j H_ω^t f dω` with the normalised measure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::harmonics::MultiIndex;
use crate::numerics::{lgamma, sphere_area};
use crate::operators::{directional_hilbert_truncated, gamma_k};

/// Fewest directions accepted by [`mor_estimate`].
pub const MIN_DIRECTIONS: usize = 32;

/// Tolerance on `|ω| = 1` for batch directions.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// `c(d,k) = π Γ((k+d)/2) / (Γ(k/2) Γ(d/2))`, evaluated in log space.
pub fn rotations_constant(d: usize, k: usize) -> Result<f64> {
    if d == 0 || k == 0 {
        return Err(Error::InvalidArgument {
            arg: "d",
            reason: format!("need d, k ≥ 1, got d = {d}, k = {k}"),
        });
    }
    let (d, k) = (d as f64, k as f64);
    Ok(
        (std::f64::consts::PI.ln() + lgamma((k + d) / 2.0) - lgamma(k / 2.0) - lgamma(d / 2.0))
            .exp(),
    )
}

/// The constant for the unnormalised surface measure, `γ_k' = (π/2) γ_k`.
pub fn rotations_constant_unnormalized(d: usize, k: usize) -> f64 {
    std::f64::consts::FRAC_PI_2 * gamma_k(d, k)
}

/// `rotations_constant(d,k) / d^{k/2}` for each `d`.
pub fn constant_asymptotic_ratio(d_values: &[usize], k: usize) -> Result<Vec<f64>> {
    d_values
        .iter()
        .map(|&d| {
            if d < k {
                return Err(Error::InvalidArgument {
                    arg: "d_values",
                    reason: format!("dimension {d} is below k = {k}"),
                });
            }
            let log_ratio = rotations_constant(d, k)?.ln() - 0.5 * k as f64 * (d as f64).ln();
            Ok(log_ratio.exp())
        })
        .collect()
}

/// Unit vectors drawn uniformly from `S^{d-1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionBatch {
    d: usize,
    directions: Vec<Vec<f64>>,
    seed: u64,
}

impl DirectionBatch {
    /// Validates that the batch is non-empty and every direction is a unit vector.
    pub fn new(d: usize, directions: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidArgument {
                arg: "directions",
                reason: "batch is empty".into(),
            });
        }
        for w in &directions {
            if w.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: w.len(),
                });
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
                return Err(Error::InvalidArgument {
                    arg: "directions",
                    reason: format!("direction has norm {norm}"),
                });
            }
        }
        Ok(Self {
            d,
            directions,
            seed,
        })
    }

    /// `count` uniform directions; direction `i` uses ChaCha stream `i`.
    pub fn sample(d: usize, count: usize, seed: u64) -> Result<Self> {
        let directions = (0..count)
            .map(|i| uniform_direction(d, seed, i as u64))
            .collect();
        Self::new(d, directions, seed)
    }

    /// `pairs` antithetic pairs stored as `ω_0, -ω_0, ω_1, -ω_1, …`.
    pub fn antithetic(d: usize, pairs: usize, seed: u64) -> Result<Self> {
        let mut directions = Vec::with_capacity(2 * pairs);
        for i in 0..pairs {
            let w = uniform_direction(d, seed, i as u64);
            directions.push(w.iter().map(|v| -v).collect());
            directions.insert(directions.len() - 1, w);
        }
        Self::new(d, directions, seed)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

fn uniform_direction(d: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-150 {
            let mut w: Vec<f64> = v.iter().map(|a| a / norm).collect();
            // one more pass keeps |ω| - 1 at rounding level
            let again = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            w.iter_mut().for_each(|a| *a /= again);
            return w;
        }
    }
}

/// Monte Carlo reconstruction of `R_j^t f` and its pointwise standard error.
#[derive(Clone, Debug)]
pub struct MorEstimate {
    pub estimate: ScalarField,
    pub stderr: ScalarField,
    /// Number of antithetic pairs averaged.
    pub pairs: usize,
}

/// `R_j^t f ≈ c(d,k) · mean_ω ω_j H_ω^t f` over antithetic direction pairs.
///
/// For odd `k` the integrand takes the same value at `ω` and `-ω`, so one
/// Hilbert transform serves each pair. `n_directions` is rounded up to an
/// even count.
pub fn mor_estimate(
    j: &MultiIndex,
    f: &ScalarField,
    t: f64,
    n_directions: usize,
    seed: u64,
) -> Result<MorEstimate> {
    if n_directions < MIN_DIRECTIONS {
        return Err(Error::InvalidArgument {
            arg: "n_directions",
            reason: format!("need at least {MIN_DIRECTIONS}, got {n_directions}"),
        });
    }
    let batch = DirectionBatch::sample(f.spec().d(), n_directions.div_ceil(2), seed)?;
    mor_estimate_pairs(j, f, t, &batch)
}

/// [`mor_estimate`] over a given batch, each direction standing for the
/// pair `ω, -ω`.
pub fn mor_estimate_pairs(
    j: &MultiIndex,
    f: &ScalarField,
    t: f64,
    batch: &DirectionBatch,
) -> Result<MorEstimate> {
    let d = f.spec().d();
    if j.d() != d || batch.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if j.d() != d { j.d() } else { batch.d() },
        });
    }
    if !j.distinct() {
        return Err(Error::RepeatedIndex {
            entries: j.entries().to_vec(),
        });
    }
    if j.k().is_multiple_of(2) {
        return Err(Error::InvalidArgument {
            arg: "j",
            reason: format!("the method of rotations needs odd k, got k = {}", j.k()),
        });
    }
    if 2 * batch.len() < MIN_DIRECTIONS {
        return Err(Error::InvalidArgument {
            arg: "batch",
            reason: format!(
                "need at least {MIN_DIRECTIONS} directions, got {}",
                2 * batch.len()
            ),
        });
    }
    let pairs = batch.len();
    let c = rotations_constant(d, j.k())?;
    let len = f.spec().len();
    // Welford accumulation per lattice point, in batch order
    let mut mean = vec![0.0; len];
    let mut m2 = vec![0.0; len];
    for (i, w) in batch.directions().iter().enumerate() {
        let weight = c * j.monomial_value(w);
        let h = directional_hilbert_truncated(f, w, t)?;
        let count = (i + 1) as f64;
        for ((m, s), &v) in mean.iter_mut().zip(m2.iter_mut()).zip(h.values()) {
            let x = weight * v;
            let delta = x - *m;
            *m += delta / count;
            *s += delta * (x - *m);
        }
    }
    let np = pairs as f64;
    let stderr: Vec<f64> = if pairs > 1 {
        m2.iter().map(|s| (s / (np - 1.0) / np).sqrt()).collect()
    } else {
        vec![0.0; len]
    };
    Ok(MorEstimate {
        estimate: ScalarField::new(*f.spec(), mean)?,
        stderr: ScalarField::new(*f.spec(), stderr)?,
        pairs,
    })
}

/// `‖estimate - reference‖₂ / ‖reference‖₂` and the matching relative
/// Monte Carlo error `‖stderr‖₂ / ‖reference‖₂`.
pub fn mor_relative_error(est: &MorEstimate, reference: &ScalarField) -> Result<(f64, f64)> {
    let norm = reference.l2_norm();
    if norm == 0.0 {
        return Ok((est.estimate.l2_norm(), est.stderr.l2_norm()));
    }
    Ok((
        est.estimate.sub(reference)?.l2_norm() / norm,
        est.stderr.l2_norm() / norm,
    ))
}

/// Checks `γ_k' · |S^{d-1}| = c(d,k)`, relating the two normalisations.
pub fn constant_consistency(d: usize, k: usize) -> Result<f64> {
    let c = rotations_constant(d, k)?;
    Ok((rotations_constant_unnormalized(d, k) * sphere_area(d) - c).abs() / c)
}
