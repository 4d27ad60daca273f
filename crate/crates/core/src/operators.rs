//! Riesz transforms on sampled fields.
//!
//! The full transform `R_P` is a Fourier multiplier applied on a zero-padded
//! lattice. Truncated transforms `R_P^t` are lattice Riemann sums of the
//! kernel `γ_k P(y)/|y|^{k+d}` over `|y| > t`, evaluated as a linear
//! convolution by FFT. Directional Hilbert transforms sample the field along
//! lines with multilinear interpolation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{default_pad, GridSpec, PaddedLattice, ScalarField};
use crate::harmonics::{is_harmonic, monomial_harmonic, MultiIndex, SolidHarmonic};
use crate::numerics::lgamma;

/// `γ_k = Γ((k+d)/2) / (π^{d/2} Γ(k/2))`, evaluated through log-gamma.
pub fn gamma_k(d: usize, k: usize) -> f64 {
    let (d, k) = (d as f64, k as f64);
    (lgamma((k + d) / 2.0) - d / 2.0 * std::f64::consts::PI.ln() - lgamma(k / 2.0)).exp()
}

/// `(-i)^k`.
pub fn minus_i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, -1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, 1.0),
    }
}

/// `m_P(ξ) = (-i)^k P(ξ)/|ξ|^k`, with `m_P(0) = 0`.
pub fn riesz_multiplier(p: &SolidHarmonic, xi: &[f64]) -> Complex64 {
    let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Complex64::default();
    }
    minus_i_pow(p.k()) * (p.evaluate_unchecked(xi) / r.powi(p.k() as i32))
}

/// `R_P f` via the multiplier on a zero-padded lattice.
pub fn riesz_apply(p: &SolidHarmonic, f: &ScalarField) -> Result<ScalarField> {
    RieszOperator::new(p, *f.spec())?.apply(f)
}

/// [`riesz_apply`] with an explicit zero-padding factor (1 means periodic).
pub fn riesz_apply_padded(p: &SolidHarmonic, f: &ScalarField, pad: usize) -> Result<ScalarField> {
    RieszOperator::with_pad(p, *f.spec(), pad)?.apply(f)
}

/// `R_P` on one grid with its multiplier table precomputed.
pub struct RieszOperator {
    lattice: PaddedLattice,
    table: Vec<Complex64>,
}

impl RieszOperator {
    pub fn new(p: &SolidHarmonic, spec: GridSpec) -> Result<Self> {
        Self::with_pad(p, spec, default_pad(&spec))
    }

    pub fn with_pad(p: &SolidHarmonic, spec: GridSpec, pad: usize) -> Result<Self> {
        check_dimension(p.d(), spec.d())?;
        let lattice = PaddedLattice::new(spec, pad);
        let mut idx = vec![0usize; spec.d()];
        let mut xi = vec![0.0; spec.d()];
        let table = (0..lattice.len())
            .map(|flat| {
                lattice.frequency_point(flat, &mut idx, &mut xi);
                riesz_multiplier(p, &xi)
            })
            .collect();
        Ok(Self { lattice, table })
    }

    pub fn spec(&self) -> &GridSpec {
        self.lattice.source()
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        self.spec().check_same(f.spec())?;
        let (out, residue) = self.lattice.apply_table(f, &self.table);
        if residue > 1e-8 {
            log::debug!("riesz_apply: imaginary residue {residue:.3e}");
        }
        Ok(out)
    }
}

fn check_dimension(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// A harmonic `P` together with its kernel constant.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    p: SolidHarmonic,
    gamma: f64,
}

impl KernelSpec {
    /// Rejects non-harmonic polynomials.
    pub fn new(p: SolidHarmonic) -> Result<Self> {
        let (ok, residual) = is_harmonic(&p);
        if !ok {
            return Err(Error::NotHarmonic {
                residual: residual.to_string(),
            });
        }
        let gamma = gamma_k(p.d(), p.k());
        Ok(Self { p, gamma })
    }

    pub fn monomial(j: &MultiIndex) -> Result<Self> {
        Self::new(monomial_harmonic(j, false)?)
    }

    pub fn polynomial(&self) -> &SolidHarmonic {
        &self.p
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self) -> usize {
        self.p.k()
    }

    pub fn d(&self) -> usize {
        self.p.d()
    }

    /// `γ_k P(y)/|y|^{k+d}` (zero at the origin).
    pub fn kernel(&self, y: &[f64]) -> f64 {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        if r2 == 0.0 {
            return 0.0;
        }
        let r = r2.sqrt();
        self.gamma * self.p.evaluate_unchecked(y) / r.powi((self.k() + self.d()) as i32)
    }
}

/// Strictly increasing positive truncation radii.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationGrid {
    values: Vec<f64>,
}

impl TruncationGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument {
                arg: "ts",
                reason: "truncation grid is empty".into(),
            });
        }
        if !values.iter().all(|t| t.is_finite() && *t > 0.0) {
            return Err(Error::InvalidArgument {
                arg: "ts",
                reason: "radii must be positive and finite".into(),
            });
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument {
                arg: "ts",
                reason: "radii must be strictly increasing".into(),
            });
        }
        Ok(Self { values })
    }

    pub fn single(t: f64) -> Result<Self> {
        Self::new(vec![t])
    }

    /// `count` log-spaced radii in `[lo, hi]`.
    pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count <= 1 || hi <= lo {
            return Self::single(lo);
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (count - 1) as f64;
        let mut values: Vec<f64> = (0..count).map(|i| (a + i as f64 * step).exp()).collect();
        values[0] = lo;
        values[count - 1] = hi;
        Self::new(values)
    }

    /// 16 log-spaced radii in `[2h, l/2]`.
    pub fn default_for(spec: &GridSpec) -> Result<Self> {
        Self::log_spaced(2.0 * spec.h(), spec.l() / 2.0, 16)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks `t_1 ≥ 2h` and `t_N ≤ l/2` for the grid.
    pub fn validate_for(&self, spec: &GridSpec) -> Result<()> {
        check_truncation(spec, self.values[0])?;
        let last = *self.values.last().unwrap();
        if last > spec.l() / 2.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument {
                arg: "ts",
                reason: format!("largest radius {last} exceeds l/2 = {}", spec.l() / 2.0),
            });
        }
        Ok(())
    }

    /// Union of two grids.
    pub fn merged(&self, other: &TruncationGrid) -> Result<Self> {
        let mut all: Vec<f64> = self.values.iter().chain(&other.values).copied().collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        Self::new(all)
    }
}

fn check_truncation(spec: &GridSpec, t: f64) -> Result<()> {
    let floor = 2.0 * spec.h();
    if !(t >= floor * (1.0 - 1e-12)) {
        return Err(Error::TruncationTooSmall { t, floor });
    }
    Ok(())
}

/// Precomputed lattice kernel for truncated transforms on one grid.
///
/// The kernel is tabulated on the offsets `-(n-1)..=(n-1)` of a `2n`-point
/// padded lattice, so every truncation radius reuses the same table.
pub struct TruncatedQuadrature {
    lattice: PaddedLattice,
    weights: Vec<f64>,
    radii: Vec<f64>,
}

impl TruncatedQuadrature {
    pub fn new(ks: &KernelSpec, spec: GridSpec) -> Result<Self> {
        check_dimension(ks.d(), spec.d())?;
        let n = spec.n() as i64;
        let lattice = PaddedLattice::with_size(spec, 2 * spec.n());
        let d = spec.d();
        let h = spec.h();
        let vol = spec.cell_volume();
        let mut idx = vec![0usize; d];
        let mut off = vec![0i64; d];
        let mut y = vec![0.0; d];
        let mut weights = vec![0.0; lattice.len()];
        let mut radii = vec![f64::INFINITY; lattice.len()];
        for flat in 0..lattice.len() {
            lattice.offset_index(flat, &mut idx, &mut off);
            if off.iter().any(|&o| o <= -n) {
                continue;
            }
            for (yi, &o) in y.iter_mut().zip(&off) {
                *yi = o as f64 * h;
            }
            weights[flat] = ks.kernel(&y) * vol;
            radii[flat] = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        Ok(Self {
            lattice,
            weights,
            radii,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        self.lattice.source()
    }

    fn table(&self, t: f64) -> Vec<Complex64> {
        let h = self.spec().h();
        let mut table: Vec<Complex64> = self
            .weights
            .iter()
            .zip(&self.radii)
            .map(|(&w, &r)| Complex64::new(w * cut_weight(r, t, h), 0.0))
            .collect();
        self.lattice.fft().forward(&mut table);
        table
    }

    /// Fixes the radius, caching the kernel transform for repeated use.
    pub fn at_radius(&self, t: f64) -> Result<TruncatedOperator<'_>> {
        check_truncation(self.spec(), t)?;
        let table = (t < self.spec().diameter()).then(|| self.table(t));
        Ok(TruncatedOperator { quad: self, table })
    }

    fn apply_transformed(&self, f_hat: &[Complex64], t: f64) -> ScalarField {
        if t >= self.spec().diameter() {
            log::info!("truncation radius {t} exceeds the box diameter; result is zero");
            return ScalarField::zeros(*self.spec());
        }
        let table = self.table(t);
        let data: Vec<Complex64> = f_hat.iter().zip(&table).map(|(a, b)| a * b).collect();
        self.lattice.restore(data).0
    }

    /// `R_P^t f` for a single radius.
    pub fn apply(&self, f: &ScalarField, t: f64) -> Result<ScalarField> {
        self.spec().check_same(f.spec())?;
        check_truncation(self.spec(), t)?;
        let f_hat = self.lattice.transform_field(f);
        Ok(self.apply_transformed(&f_hat, t))
    }

    /// `R_P^t f` for every radius, sharing one transform of `f`.
    pub fn apply_many(&self, f: &ScalarField, ts: &[f64]) -> Result<Vec<ScalarField>> {
        self.spec().check_same(f.spec())?;
        for &t in ts {
            check_truncation(self.spec(), t)?;
        }
        let f_hat = self.lattice.transform_field(f);
        Ok(ts
            .iter()
            .map(|&t| self.apply_transformed(&f_hat, t))
            .collect())
    }
}

/// Share of the lattice cell at radius `r` lying outside the ball of
/// radius `t`: a linear ramp of width `h` centred on `t`.
///
/// In one dimension this is the exact cell fraction, which keeps the
/// Riemann sum second-order accurate for every `t` rather than only for
/// `t` halfway between lattice shells.
pub fn cut_weight(r: f64, t: f64, h: f64) -> f64 {
    ((r - t) / h + 0.5).clamp(0.0, 1.0)
}

/// `R_P^t` at a fixed radius, with the kernel transform cached.
pub struct TruncatedOperator<'a> {
    quad: &'a TruncatedQuadrature,
    table: Option<Vec<Complex64>>,
}

impl TruncatedOperator<'_> {
    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        let spec = self.quad.spec();
        spec.check_same(f.spec())?;
        let Some(table) = &self.table else {
            return Ok(ScalarField::zeros(*spec));
        };
        Ok(self.quad.lattice.apply_table(f, table).0)
    }
}

/// `R_P^t f(x) = γ_k Σ_{|y|>t} P(y)/|y|^{k+d} f(x-y) h^d` over lattice offsets,
/// with `f` zero outside the box.
pub fn truncated_riesz_direct(ks: &KernelSpec, f: &ScalarField, t: f64) -> Result<ScalarField> {
    TruncatedQuadrature::new(ks, *f.spec())?.apply(f, t)
}

/// `R_Q^t (R_P f)` with `R_P f` computed on a box of twice the half-width.
///
/// `R_P f` decays only like `|x|^{-d}`, so cropping it to the original box
/// would drop a tail the truncated quadrature still sees. The result is
/// cropped back to the grid of `f`.
pub fn truncated_of_riesz(
    q: &KernelSpec,
    p: &SolidHarmonic,
    f: &ScalarField,
    t: f64,
) -> Result<ScalarField> {
    let big = f.embed(2).or_else(|_| f.embed(1))?;
    let inner = riesz_apply(p, &big)?;
    truncated_riesz_direct(q, &inner, t)?.crop_to(f.spec())
}

/// The same Riemann sum as [`truncated_riesz_direct`] at a single lattice
/// point, summed directly.
pub fn truncated_riesz_at(ks: &KernelSpec, f: &ScalarField, t: f64, flat: usize) -> Result<f64> {
    let spec = f.spec();
    check_dimension(ks.d(), spec.d())?;
    check_truncation(spec, t)?;
    let d = spec.d();
    let mut x = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut y = vec![0.0; d];
    spec.point(flat, &mut x);
    let terms: Vec<f64> = (0..spec.len())
        .map(|b| {
            spec.point(b, &mut z);
            for i in 0..d {
                y[i] = x[i] - z[i];
            }
            let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let c = cut_weight(r, t, spec.h());
            if c > 0.0 {
                c * ks.kernel(&y) * f.values()[b]
            } else {
                0.0
            }
        })
        .collect();
    Ok(crate::numerics::pairwise_sum(&terms) * spec.cell_volume())
}

/// Pointwise `max_i |R_P^{t_i} f|` over the truncation grid.
pub fn maximal_riesz(ks: &KernelSpec, f: &ScalarField, ts: &TruncationGrid) -> Result<ScalarField> {
    ts.validate_for(f.spec())?;
    let quad = TruncatedQuadrature::new(ks, *f.spec())?;
    let fields = quad.apply_many(f, ts.values())?;
    Ok(pointwise_max_abs(*f.spec(), &fields))
}

pub(crate) fn pointwise_max_abs(spec: GridSpec, fields: &[ScalarField]) -> ScalarField {
    let mut out = vec![0.0f64; spec.len()];
    for g in fields {
        for (o, v) in out.iter_mut().zip(g.values()) {
            *o = o.max(v.abs());
        }
    }
    ScalarField::from_vec_unchecked(spec, out)
}

fn check_unit(omega: &[f64], d: usize) -> Result<()> {
    check_dimension(d, omega.len())?;
    let norm = omega.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument {
            arg: "omega",
            reason: format!("direction has norm {norm}, expected 1"),
        });
    }
    Ok(())
}

/// Trapezoid nodes on `[t, s_max]` with step at most `h/2`, as `(s, weight/s)`.
fn hilbert_nodes(t: f64, s_max: f64, h: f64) -> Vec<(f64, f64)> {
    let m = ((s_max - t) / (0.5 * h)).ceil().max(1.0) as usize;
    let ds = (s_max - t) / m as f64;
    (0..=m)
        .map(|i| {
            let s = t + i as f64 * ds;
            let w = if i == 0 || i == m { 0.5 * ds } else { ds };
            (s, w / s)
        })
        .collect()
}

/// `H_ω^t f(x) = (1/π) ∫_{|s|>t} f(x - sω) ds/s`.
///
/// Line samples use multilinear interpolation with zero extension and the
/// trapezoid rule on step `h/2` over `t ≤ |s| ≤ 2l√d`. For a fixed node
/// the interpolation weights are the same at every lattice point, so each
/// node adds `2^d` shifted copies of `f` over their overlap with the box.
pub fn directional_hilbert_truncated(
    f: &ScalarField,
    omega: &[f64],
    t: f64,
) -> Result<ScalarField> {
    let spec = *f.spec();
    check_unit(omega, spec.d())?;
    check_truncation(&spec, t)?;
    let s_max = spec.diameter();
    if t >= s_max {
        return Ok(ScalarField::zeros(spec));
    }
    let d = spec.d();
    let n = spec.n() as i64;
    let inv_h = 1.0 / spec.h();
    let mut out = vec![0.0; spec.len()];
    let mut base = vec![0i64; d];
    let mut frac = vec![0.0; d];
    let mut offset = vec![0i64; d];
    for (s, w) in hilbert_nodes(t, s_max, spec.h()) {
        // f(x - sω) enters with +1/s and f(x + sω) with -1/s
        for sign in [1.0, -1.0] {
            let mut reachable = true;
            for i in 0..d {
                let u = -sign * s * omega[i] * inv_h;
                base[i] = u.floor() as i64;
                frac[i] = u - base[i] as f64;
                reachable &= base[i] < n && base[i] + 1 > -n;
            }
            if !reachable {
                continue;
            }
            for corner in 0..1usize << d {
                let mut weight = sign * w;
                for i in 0..d {
                    let up = corner >> (d - 1 - i) & 1 == 1;
                    weight *= if up { frac[i] } else { 1.0 - frac[i] };
                    offset[i] = base[i] + up as i64;
                }
                if weight != 0.0 {
                    add_shifted(&mut out, f.values(), n, &offset, weight);
                }
            }
        }
    }
    for v in out.iter_mut() {
        *v /= std::f64::consts::PI;
    }
    Ok(ScalarField::from_vec_unchecked(spec, out))
}

/// `out[m] += weight · f[m + offset]` wherever both indices lie in the box.
fn add_shifted(out: &mut [f64], f: &[f64], n: i64, offset: &[i64], weight: f64) {
    let d = offset.len();
    let mut lo = [0i64; crate::grid::MAX_DIMENSION];
    let mut hi = [0i64; crate::grid::MAX_DIMENSION];
    for i in 0..d {
        lo[i] = (-offset[i]).max(0);
        hi[i] = (n - offset[i]).min(n);
        if lo[i] >= hi[i] {
            return;
        }
    }
    let shift = offset.iter().fold(0i64, |acc, &o| acc * n + o);
    let last = d - 1;
    let width = (hi[last] - lo[last]) as usize;
    let mut idx = lo;
    loop {
        let row = idx[..last].iter().fold(0i64, |acc, &m| acc * n + m) * n + lo[last];
        let src = (row + shift) as usize;
        let dst = row as usize;
        for (o, v) in out[dst..dst + width].iter_mut().zip(&f[src..src + width]) {
            *o += weight * v;
        }
        // odometer over the leading axes
        let mut axis = last;
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < hi[axis] {
                break;
            }
            idx[axis] = lo[axis];
        }
    }
}

/// Pointwise `max_i |H^{t_i} f|` for a one-dimensional field.
pub fn maximal_hilbert_1d(f: &ScalarField, ts: &TruncationGrid) -> Result<ScalarField> {
    check_dimension(1, f.spec().d())?;
    ts.validate_for(f.spec())?;
    let fields = ts
        .values()
        .iter()
        .map(|&t| directional_hilbert_truncated(f, &[1.0], t))
        .collect::<Result<Vec<_>>>()?;
    Ok(pointwise_max_abs(*f.spec(), &fields))
}
