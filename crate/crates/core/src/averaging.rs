//! Averaging over SO(d): the index set `I`, the composite operators
//! `R^t = Σ_{j∈I} R_j^t R_j` and `R^*`, the constants `ã` and `C(d,k)`,
//! Haar sampling and conjugation `T_U f(x) = T(f(U^{-1}·))(Ux)`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::factorization::{apply_mkt, mt_profile, RadialProfile};
use crate::grid::{
    default_pad, support_leak, GridSpec, Interpolator, PaddedLattice, ScalarField,
    SUPPORT_LEAK_TOLERANCE,
};
use crate::harmonics::{monomial_harmonic, sphere_moment_exact, MultiIndex};
use crate::numerics::pairwise_sum_by;
use crate::operators::{
    pointwise_max_abs, KernelSpec, RieszOperator, TruncatedOperator, TruncatedQuadrature,
    TruncationGrid,
};

/// Tolerance on `‖UᵀU - Id‖_max`.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-10;

/// Tolerance on `|det U - 1|`.
pub const DETERMINANT_TOLERANCE: f64 = 1e-8;

/// Fewest rotations accepted by [`averaging_residual`].
pub const MIN_ROTATIONS: usize = 8;

/// All `j ∈ {1,…,d}^k` with pairwise distinct entries, in lexicographic order.
pub fn index_set_i(d: usize, k: usize) -> Result<Vec<MultiIndex>> {
    check_k_le_d(d, k)?;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    let mut used = vec![false; d + 1];
    permutations(d, k, &mut current, &mut used, &mut out)?;
    Ok(out)
}

fn permutations(
    d: usize,
    k: usize,
    current: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<MultiIndex>,
) -> Result<()> {
    if current.len() == k {
        out.push(MultiIndex::new(current.clone(), d)?);
        return Ok(());
    }
    for j in 1..=d {
        if used[j] {
            continue;
        }
        used[j] = true;
        current.push(j);
        permutations(d, k, current, used, out)?;
        current.pop();
        used[j] = false;
    }
    Ok(())
}

/// Increasing `k`-subsets of `{1,…,d}`.
fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for j in start..=d {
            cur.push(j);
            go(j + 1, d, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(1, d, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn check_k_le_d(d: usize, k: usize) -> Result<()> {
    if k == 0 || d == 0 || k > d {
        return Err(Error::InvalidArgument {
            arg: "k",
            reason: format!("need 1 ≤ k ≤ d, got k = {k}, d = {d}"),
        });
    }
    Ok(())
}

/// `|I| = d!/(d-k)!`.
pub fn index_set_size(d: usize, k: usize) -> Result<u128> {
    check_k_le_d(d, k)?;
    Ok((0..k).map(|i| (d - i) as u128).product())
}

/// `ã = -|I| ∫_{S^{d-1}} ω_1² ⋯ ω_k² dω` as an exact rational.
pub fn a_tilde_exact(d: usize, k: usize) -> Result<BigRational> {
    let size = (0..k).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(d.saturating_sub(i))
    });
    let moment = sphere_moment_exact(d, k)?;
    Ok(-(BigRational::from_integer(size) * moment))
}

/// `ã(d,k) = -Π_{i<k} (d-i)/(d+2i)`.
pub fn a_tilde(d: usize, k: usize) -> Result<f64> {
    check_k_le_d(d, k)?;
    Ok(-(0..k)
        .map(|i| (d - i) as f64 / (d + 2 * i) as f64)
        .product::<f64>())
}

/// `C(d,k) = 1/ã`.
pub fn c_dk(d: usize, k: usize) -> Result<f64> {
    let a = a_tilde(d, k)?;
    if a == 0.0 || a_tilde_exact(d, k)?.is_zero() {
        return Err(Error::Degenerate(format!("ã({d},{k}) vanishes")));
    }
    Ok(1.0 / a)
}

/// A proper rotation of ℝ^d, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RotationMatrix {
    d: usize,
    entries: Vec<f64>,
}

impl RotationMatrix {
    /// Validates orthogonality and `det = +1`.
    pub fn new(d: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: entries.len(),
            });
        }
        let u = Self { d, entries };
        let orth = u.orthogonality_error();
        if !(orth <= ORTHOGONALITY_TOLERANCE) {
            return Err(Error::InvalidArgument {
                arg: "entries",
                reason: format!("‖UᵀU - Id‖_max = {orth:.3e}"),
            });
        }
        let det = u.determinant();
        if !((det - 1.0).abs() <= DETERMINANT_TOLERANCE) {
            return Err(Error::InvalidArgument {
                arg: "entries",
                reason: format!("det U = {det}"),
            });
        }
        Ok(u)
    }

    pub fn identity(d: usize) -> Self {
        let mut entries = vec![0.0; d * d];
        for i in 0..d {
            entries[i * d + i] = 1.0;
        }
        Self { d, entries }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.d)
    }

    /// `out = U x`.
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.d) {
            *o = (0..self.d).map(|j| self.entry(i, j) * x[j]).sum();
        }
    }

    /// `out = Uᵀ x = U^{-1} x`.
    pub fn apply_inverse(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.d) {
            *o = (0..self.d).map(|j| self.entry(j, i) * x[j]).sum();
        }
    }

    /// `‖UᵀU - Id‖_max`.
    pub fn orthogonality_error(&self) -> f64 {
        let d = self.d;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..d).map(|r| self.entry(r, i) * self.entry(r, j)).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> f64 {
        determinant(self.d, self.entries.clone())
    }
}

fn determinant(d: usize, mut a: Vec<f64>) -> f64 {
    let mut det = 1.0;
    for c in 0..d {
        let pivot = (c..d)
            .max_by(|&x, &y| a[x * d + c].abs().total_cmp(&a[y * d + c].abs()))
            .unwrap_or(c);
        if a[pivot * d + c] == 0.0 {
            return 0.0;
        }
        if pivot != c {
            for j in 0..d {
                a.swap(c * d + j, pivot * d + j);
            }
            det = -det;
        }
        det *= a[c * d + c];
        for r in c + 1..d {
            let factor = a[r * d + c] / a[c * d + c];
            for j in c..d {
                a[r * d + j] -= factor * a[c * d + j];
            }
        }
    }
    det
}

/// One Haar-distributed rotation; equal to `haar_rotations(d, 1, seed)[0]`.
pub fn haar_rotation(d: usize, seed: u64) -> Result<RotationMatrix> {
    haar_sample(d, seed, 0)
}

/// `count` independent Haar rotations; sample `i` uses ChaCha stream `i`,
/// so a longer run extends a shorter one with the same seed.
pub fn haar_rotations(d: usize, count: usize, seed: u64) -> Result<Vec<RotationMatrix>> {
    (0..count).map(|i| haar_sample(d, seed, i as u64)).collect()
}

/// Gram-Schmidt on a Gaussian matrix. The implied `R` has a positive
/// diagonal, which makes `Q` Haar on O(d); flipping the first column when
/// `det Q = -1` then gives Haar on SO(d). SO(1) is the identity.
fn haar_sample(d: usize, seed: u64, stream: u64) -> Result<RotationMatrix> {
    if d == 0 {
        return Err(Error::InvalidArgument {
            arg: "d",
            reason: "dimension must be positive".into(),
        });
    }
    if d == 1 {
        return Ok(RotationMatrix::identity(1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    loop {
        // columns stored contiguously: cols[c*d + r]
        let mut cols: Vec<f64> = (0..d * d)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        if !orthonormalize(d, &mut cols) {
            continue;
        }
        let mut entries = vec![0.0; d * d];
        for c in 0..d {
            for r in 0..d {
                entries[r * d + c] = cols[c * d + r];
            }
        }
        if determinant(d, entries.clone()) < 0.0 {
            for r in 0..d {
                entries[r * d] = -entries[r * d];
            }
        }
        return RotationMatrix::new(d, entries);
    }
}

/// Modified Gram-Schmidt with one reorthogonalisation pass. Returns false
/// for a numerically singular input.
fn orthonormalize(d: usize, cols: &mut [f64]) -> bool {
    for c in 0..d {
        for _ in 0..2 {
            for p in 0..c {
                let dot: f64 = (0..d).map(|r| cols[c * d + r] * cols[p * d + r]).sum();
                for r in 0..d {
                    cols[c * d + r] -= dot * cols[p * d + r];
                }
            }
        }
        let norm = (0..d).map(|r| cols[c * d + r].powi(2)).sum::<f64>().sqrt();
        if !(norm > 1e-8) {
            return false;
        }
        for r in 0..d {
            cols[c * d + r] /= norm;
        }
    }
    true
}

/// `x ↦ f(M x)` sampled on the grid of `f`, with `M = U` or `M = U^{-1}`.
fn compose_with(f: &ScalarField, u: &RotationMatrix, inverse: bool) -> ScalarField {
    let spec = *f.spec();
    let interp = Interpolator::new(f);
    let mut y = vec![0.0; spec.d()];
    let mut x = vec![0.0; spec.d()];
    let values = (0..spec.len())
        .map(|i| {
            spec.point(i, &mut y);
            if inverse {
                u.apply_inverse(&y, &mut x);
            } else {
                u.apply(&y, &mut x);
            }
            interp.sample(&x)
        })
        .collect();
    ScalarField::new(spec, values).expect("length matches grid")
}

/// `T_U f(x) = T(f(U^{-1}·))(Ux)` with multilinear interpolation and zero
/// extension. `U = Id` applies `op` directly.
///
/// In strict mode fields leaking more than [`SUPPORT_LEAK_TOLERANCE`] of
/// their energy outside radius `l/2` are rejected.
pub fn conjugate_apply<F>(
    op: F,
    u: &RotationMatrix,
    f: &ScalarField,
    strict: bool,
) -> Result<ScalarField>
where
    F: FnOnce(&ScalarField) -> Result<ScalarField>,
{
    let spec = f.spec();
    if u.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            got: u.d(),
        });
    }
    if strict {
        let leak = support_leak(f);
        if leak > SUPPORT_LEAK_TOLERANCE {
            return Err(Error::SupportViolation {
                radius: spec.l() / 2.0,
                fraction: leak,
            });
        }
    }
    if u.is_identity() {
        return op(f);
    }
    let rotated = compose_with(f, u, true);
    let image = op(&rotated)?;
    image.spec().check_same(spec)?;
    Ok(compose_with(&image, u, false))
}

struct CompositeTerm {
    riesz: RieszOperator,
    quad: TruncatedQuadrature,
}

/// `R^t = Σ_{j∈I} R_j^t R_j` on a fixed grid with all multiplier and kernel
/// tables prepared once.
///
/// Permutations of one index set give the same monomial, so the sum runs
/// over `k`-subsets with weight `k!`. Each `R_j f` is evaluated on a box of
/// twice the half-width (when the point budget allows) before truncation,
/// as in [`crate::operators::truncated_of_riesz`].
pub struct CompositeRt {
    spec: GridSpec,
    big: GridSpec,
    k: usize,
    weight: f64,
    terms: Vec<CompositeTerm>,
}

impl CompositeRt {
    pub fn new(spec: GridSpec, k: usize) -> Result<Self> {
        let d = spec.d();
        check_k_le_d(d, k)?;
        let big = GridSpec::new(d, 2 * spec.n(), 2.0 * spec.l()).unwrap_or(spec);
        let terms = subsets(d, k)
            .into_iter()
            .map(|s| {
                let p = monomial_harmonic(&MultiIndex::new(s, d)?, false)?;
                let ks = KernelSpec::new(p.clone())?;
                Ok(CompositeTerm {
                    riesz: RieszOperator::new(&p, big)?,
                    quad: TruncatedQuadrature::new(&ks, big)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let weight = (1..=k).map(|i| i as f64).product();
        Ok(Self {
            spec,
            big,
            k,
            weight,
            terms,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Caches the kernel transforms for a single truncation radius.
    pub fn at_radius(&self, t: f64) -> Result<CompositeRtAt<'_>> {
        let ops = self
            .terms
            .iter()
            .map(|term| term.quad.at_radius(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(CompositeRtAt { base: self, ops })
    }

    /// `R^t f` for every `t` in `ts`, sharing the `R_j f` evaluations.
    pub fn apply_many(&self, f: &ScalarField, ts: &[f64]) -> Result<Vec<ScalarField>> {
        self.spec.check_same(f.spec())?;
        let big_f = self.lift(f)?;
        let mut acc = vec![ScalarField::zeros(self.big); ts.len()];
        for term in &self.terms {
            let inner = term.riesz.apply(&big_f)?;
            for (slot, out) in acc.iter_mut().zip(term.quad.apply_many(&inner, ts)?) {
                slot.add_scaled_in_place(self.weight, &out);
            }
        }
        acc.iter().map(|g| g.crop_to(&self.spec)).collect()
    }

    fn lift(&self, f: &ScalarField) -> Result<ScalarField> {
        f.embed(self.big.n() / self.spec.n())
    }
}

/// [`CompositeRt`] at one truncation radius.
pub struct CompositeRtAt<'a> {
    base: &'a CompositeRt,
    ops: Vec<TruncatedOperator<'a>>,
}

impl CompositeRtAt<'_> {
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        let base = self.base;
        base.spec.check_same(f.spec())?;
        let big_f = base.lift(f)?;
        let mut acc = ScalarField::zeros(base.big);
        for (term, op) in base.terms.iter().zip(&self.ops) {
            let inner = term.riesz.apply(&big_f)?;
            acc.add_scaled_in_place(base.weight, &op.apply(&inner)?);
        }
        acc.crop_to(&base.spec)
    }
}

/// `R^t f = Σ_{j∈I} R_j^t R_j f` with `d` taken from the grid of `f`.
pub fn composite_rt(f: &ScalarField, t: f64, k: usize) -> Result<ScalarField> {
    CompositeRt::new(*f.spec(), k)?.at_radius(t)?.apply(f)
}

/// `R^t f` through the factorization: the radial profile times
/// `a(ξ) = Σ_{j∈I} m_j(ξ)² = (-1)^k k! e_k(ξ_1²,…,ξ_d²) / |ξ|^{2k}`.
pub fn composite_rt_spectral(f: &ScalarField, profile: &RadialProfile) -> Result<ScalarField> {
    profile.check_geometry(f.spec())?;
    let k = profile.k();
    check_k_le_d(f.spec().d(), k)?;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let weight: f64 = (1..=k).map(|i| i as f64).product();
    let lattice = PaddedLattice::new(*f.spec(), default_pad(f.spec()));
    let (out, _) = lattice.apply(f, |xi| {
        let r2: f64 = xi.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return Complex64::default();
        }
        let a = sign * weight * elementary_symmetric(xi, k) / r2.powi(k as i32);
        Complex64::new(a * profile.value_at(r2.sqrt()), 0.0)
    });
    Ok(out)
}

/// `e_k(ξ_1², …, ξ_d²)`.
fn elementary_symmetric(xi: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for v in xi {
        let s = v * v;
        for j in (1..=k).rev() {
            e[j] += s * e[j - 1];
        }
    }
    e[k]
}

/// `R^* f = max_{t ∈ ts} |R^t f|` pointwise.
pub fn composite_rstar(f: &ScalarField, ts: &TruncationGrid, k: usize) -> Result<ScalarField> {
    ts.validate_for(f.spec())?;
    let fields = CompositeRt::new(*f.spec(), k)?.apply_many(f, ts.values())?;
    Ok(pointwise_max_abs(*f.spec(), &fields))
}

/// Monte Carlo check of `M_k^t f = C(d,k) ∫_{SO(d)} (R^t)_U f dμ(U)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragingReport {
    pub d: usize,
    pub k: usize,
    pub t: f64,
    pub rotations_used: usize,
    pub residual: f64,
    pub stderr: f64,
}

/// `‖M_k^t f - C(d,k) · mean_U (R^t)_U f‖₂ / ‖f‖₂` over `n_rotations` Haar
/// samples, with a jackknife standard error.
pub fn averaging_residual(
    f: &ScalarField,
    t: f64,
    k: usize,
    n_rotations: usize,
    seed: u64,
) -> Result<AveragingReport> {
    let spec = *f.spec();
    let d = spec.d();
    check_k_le_d(d, k)?;
    if n_rotations < MIN_ROTATIONS {
        return Err(Error::InvalidArgument {
            arg: "n_rotations",
            reason: format!("need at least {MIN_ROTATIONS}, got {n_rotations}"),
        });
    }
    let profile = mt_profile(d, k, t, &spec)?;
    let lhs = apply_mkt(&profile, f)?;
    let c = c_dk(d, k)?;
    let norm = f.l2_norm();
    let report = |residual, stderr| AveragingReport {
        d,
        k,
        t,
        rotations_used: n_rotations,
        residual,
        stderr,
    };
    if norm == 0.0 {
        return Ok(report(0.0, 0.0));
    }

    let composite = CompositeRt::new(spec, k)?;
    let op = composite.at_radius(t)?;
    let rotations = haar_rotations(d, n_rotations, seed)?;
    let samples = rotations
        .iter()
        .map(|u| conjugate_apply(|g| op.apply(g), u, f, false).map(|s| s.scaled(c).into_values()))
        .collect::<Result<Vec<_>>>()?;

    let len = spec.len();
    let total: Vec<f64> = (0..len)
        .map(|i| pairwise_sum_by(samples.len(), &|s| samples[s][i]))
        .collect();
    let target = lhs.values();
    let residual_of = |mean: &dyn Fn(usize) -> f64| {
        let e2 = pairwise_sum_by(len, &|i| (target[i] - mean(i)).powi(2));
        (e2 * spec.cell_volume()).sqrt() / norm
    };
    let nf = n_rotations as f64;
    let residual = residual_of(&|i| total[i] / nf);
    let leave_one_out: Vec<f64> = samples
        .iter()
        .map(|s| residual_of(&|i| (total[i] - s[i]) / (nf - 1.0)))
        .collect();
    let mean_loo = leave_one_out.iter().sum::<f64>() / nf;
    let var = (nf - 1.0) / nf
        * leave_one_out
            .iter()
            .map(|r| (r - mean_loo).powi(2))
            .sum::<f64>();
    Ok(report(residual, var.sqrt()))
}
