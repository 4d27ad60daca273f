//! The radial factorization operator `M_k^t` with `R_P^t = M_k^t R_P`.
//!
//! The multiplier of `M_k^t` is recovered as the spectral ratio between the
//! truncated kernel `K_P 1_{|y|>t}` and the full multiplier `m_P`, binned by
//! radius. The truncated kernel is tabulated on an extended lattice of the
//! same spacing and rolled off smoothly at a large radius, which keeps the
//! ratio real and radial.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{default_pad, FftNd, GridSpec, PaddedLattice, ScalarField};
use crate::harmonics::{monomial_harmonic, MultiIndex, SolidHarmonic};
use crate::operators::{
    cut_weight, riesz_apply, riesz_multiplier, truncated_of_riesz, truncated_riesz_direct,
    KernelSpec,
};

/// Lattice points where `|m_P|` falls below this fraction of its maximum
/// are left out of the ratio.
pub const CONDITION_THRESHOLD: f64 = 1e-6;

/// Largest tolerated fraction of missing bins in the resolved band.
pub const MAX_MISSING_FRACTION: f64 = 0.2;

/// Largest tolerated relative imaginary part of the binned ratio.
pub const MAX_IMAGINARY_FRACTION: f64 = 0.05;

/// Point cap for the extended kernel lattice.
pub const EXTENDED_POINT_BUDGET: usize = 1 << 23;

/// Outer kernel radius in units of the box half-width `l`.
///
/// The first nonzero bin sits at `1/(2l)`, so the roll-off starts three
/// periods out at the lowest frequency the profile resolves.
pub const KERNEL_REACH: f64 = 6.0;

/// cos² roll-off from 1 at `r_out/2` to 0 at `r_out`.
fn roll_off(r: f64, r_out: f64) -> f64 {
    let half = 0.5 * r_out;
    if r <= half {
        1.0
    } else if r >= r_out {
        0.0
    } else {
        (std::f64::consts::FRAC_PI_2 * (r - half) / half)
            .cos()
            .powi(2)
    }
}

/// Sampled radial multiplier `r ↦ m^t(r)`.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    t: f64,
    k: usize,
    d: usize,
    h: f64,
    l: f64,
    spacing: f64,
    resolved: usize,
    radii: Vec<f64>,
    values: Vec<Complex64>,
    counts: Vec<usize>,
    cvs: Vec<f64>,
    stds: Vec<f64>,
}

impl RadialProfile {
    /// The profile equal to `value` at every radius, on the geometry of `spec`.
    pub fn constant(spec: &GridSpec, k: usize, t: f64, value: f64) -> Self {
        let spacing = spec.frequency_spacing();
        let bins = max_bin(spec.d(), spec.h(), spacing) + 1;
        Self {
            t,
            k,
            d: spec.d(),
            h: spec.h(),
            l: spec.l(),
            spacing,
            resolved: resolved_limit(spec.h(), spacing),
            radii: (0..bins).map(|i| i as f64 * spacing).collect(),
            values: vec![Complex64::new(value, 0.0); bins],
            counts: vec![0; bins],
            cvs: vec![0.0; bins],
            stds: vec![0.0; bins],
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Bin width, equal to the frequency spacing `1/(2l)`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Mean `|ξ|` of the lattice points in each bin (the bin centre for
    /// empty bins, 0 for the zero-frequency bin).
    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn bin_counts(&self) -> &[usize] {
        &self.counts
    }

    /// Coefficient of variation of the raw ratio inside each bin, after
    /// removing its linear trend in `|ξ|`.
    pub fn bin_cv(&self) -> &[f64] {
        &self.cvs
    }

    /// Resolved bins: `1 ≤ i` with centre radius below `1/(6h)`, i.e. at
    /// least six lattice points per wavelength.
    pub fn resolved_bins(&self) -> std::ops::Range<usize> {
        1..self.resolved.min(self.values.len())
    }

    /// Largest per-bin coefficient of variation over the resolved band.
    pub fn max_resolved_cv(&self) -> f64 {
        self.resolved_bins()
            .filter(|&i| self.counts[i] > 1)
            .map(|i| self.cvs[i])
            .fold(0.0, f64::max)
    }

    /// Largest per-bin standard deviation of the detrended raw ratio over
    /// the resolved band, relative to [`RadialProfile::resolved_scale`].
    ///
    /// Unlike the coefficient of variation this stays meaningful in bins
    /// where the profile crosses zero.
    pub fn max_resolved_spread(&self) -> f64 {
        let scale = self.resolved_scale();
        self.resolved_bins()
            .filter(|&i| self.counts[i] > 1)
            .map(|i| self.stds[i] / scale)
            .fold(0.0, f64::max)
    }

    /// Largest `|m^t|` over the resolved band.
    pub fn resolved_scale(&self) -> f64 {
        self.resolved_bins()
            .map(|i| self.values[i].re.abs())
            .fold(0.0, f64::max)
    }

    /// Real profile value at radius `r` by linear interpolation between bins.
    pub fn value_at(&self, r: f64) -> f64 {
        let i = self.radii.partition_point(|&x| x <= r);
        if i == 0 {
            return self.values[0].re;
        }
        if i >= self.radii.len() {
            return self.values[self.values.len() - 1].re;
        }
        let (r0, r1) = (self.radii[i - 1], self.radii[i]);
        let w = (r - r0) / (r1 - r0);
        (1.0 - w) * self.values[i - 1].re + w * self.values[i].re
    }

    /// Errors unless `spec` matches the dimension, spacing and half-width.
    pub fn check_geometry(&self, spec: &GridSpec) -> Result<()> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if spec.d() != self.d || !close(spec.h(), self.h) || !close(spec.l(), self.l) {
            return Err(Error::GridMismatch(format!(
                "profile built for d={}, h={}, l={} but field has d={}, h={}, l={}",
                self.d,
                self.h,
                self.l,
                spec.d(),
                spec.h(),
                spec.l()
            )));
        }
        Ok(())
    }

    /// CSV with columns `radius,re,im,bin_count,bin_cv`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "radius,re,im,bin_count,bin_cv")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{},{:.16e}",
                self.radii[i], v.re, v.im, self.counts[i], self.cvs[i]
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn max_bin(d: usize, h: f64, spacing: f64) -> usize {
    ((d as f64).sqrt() / (2.0 * h) / spacing).ceil() as usize + 1
}

fn resolved_limit(h: f64, spacing: f64) -> usize {
    // first bin whose centre reaches 1/(6h)
    let cutoff = 1.0 / (6.0 * h);
    let mut i = 0;
    while (i as f64) * spacing < cutoff * (1.0 - 1e-12) {
        i += 1;
    }
    i
}

/// Profile of `M_k^t` built from the reference monomial `x_1 ⋯ x_k`.
pub fn mt_profile(d: usize, k: usize, t: f64, spec: &GridSpec) -> Result<RadialProfile> {
    if spec.d() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: spec.d(),
        });
    }
    let p0 = monomial_harmonic(&MultiIndex::canonical(d, k)?, false)?;
    mt_profile_from(&p0, t, spec)
}

/// Profile of `M_k^t` built from an arbitrary harmonic `P` of degree `k`.
pub fn mt_profile_from(p: &SolidHarmonic, t: f64, spec: &GridSpec) -> Result<RadialProfile> {
    let ks = KernelSpec::new(p.clone())?;
    if ks.d() != spec.d() {
        return Err(Error::DimensionMismatch {
            expected: spec.d(),
            got: ks.d(),
        });
    }
    let d = spec.d();
    let h = spec.h();
    let floor = 2.0 * h;
    if !(t >= floor * (1.0 - 1e-12)) {
        return Err(Error::TruncationTooSmall { t, floor });
    }

    // The extended lattice has n·m points per axis, so every m-th frequency
    // lies on the box frequency lattice q/(2l).
    let n = spec.n();
    let want = (KERNEL_REACH * spec.l()).max(spec.diameter());
    let mut m_fac = ((2.0 * (want / h).ceil() + 2.0) / n as f64).ceil().max(1.0) as usize;
    while m_fac > 1 && ((n * m_fac) as u128).pow(d as u32) > EXTENDED_POINT_BUDGET as u128 {
        m_fac -= 1;
    }
    let n_ext = n * m_fac;
    let r_out = want.min((n_ext / 2 - 1) as f64 * h);
    if r_out <= 2.0 * t {
        return Err(Error::IllConditioned(format!(
            "truncation radius {t} leaves no kernel inside the extended lattice (R = {r_out})"
        )));
    }
    log::debug!("mt_profile: extended lattice {n_ext}^{d}, kernel radius {r_out:.3}");

    let fft = FftNd::new(n_ext, d);
    let total = fft.len();
    let vol = spec.cell_volume();
    let mut idx = vec![0usize; d];
    let mut y = vec![0.0; d];
    let unravel = |mut flat: usize, idx: &mut [usize]| {
        for slot in idx.iter_mut().rev() {
            *slot = flat % n_ext;
            flat /= n_ext;
        }
    };
    let signed = |q: usize| -> i64 {
        if q < n_ext / 2 {
            q as i64
        } else {
            q as i64 - n_ext as i64
        }
    };
    let mut data = vec![Complex64::default(); total];
    for (flat, slot) in data.iter_mut().enumerate() {
        unravel(flat, &mut idx);
        for (yi, &q) in y.iter_mut().zip(idx.iter()) {
            *yi = signed(q) as f64 * h;
        }
        let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cut = cut_weight(r, t, h);
        if cut > 0.0 && r < r_out {
            *slot = Complex64::new(ks.kernel(&y) * vol * cut * roll_off(r, r_out), 0.0);
        }
    }
    fft.forward(&mut data);

    let mut xi = vec![0.0; d];
    let mut samples = Vec::with_capacity(spec.len());
    let mut m_max = 0.0f64;
    for box_flat in 0..spec.len() {
        spec.unravel(box_flat, &mut idx);
        let flat = idx.iter().fold(0, |acc, &c| acc * n_ext + c * m_fac);
        spec.frequency_point(box_flat, &mut xi);
        let m = riesz_multiplier(p, &xi);
        m_max = m_max.max(m.norm());
        samples.push((flat, xi.iter().map(|v| v * v).sum::<f64>().sqrt(), m));
    }

    let spacing = spec.frequency_spacing();
    let bins = max_bin(d, h, spacing) + 1;
    let mut sum = vec![Complex64::default(); bins];
    let mut sum_sq = vec![0.0f64; bins];
    let mut sum_r = vec![0.0f64; bins];
    let mut sum_rr = vec![0.0f64; bins];
    let mut sum_xr = vec![Complex64::default(); bins];
    let mut counts = vec![0usize; bins];
    for &(flat, r, m) in &samples {
        if r == 0.0 || m.norm() < CONDITION_THRESHOLD * m_max {
            continue;
        }
        let b = (r / spacing).round() as usize;
        if b >= bins {
            continue;
        }
        let ratio = data[flat] / m;
        sum[b] += ratio;
        sum_sq[b] += ratio.norm_sqr();
        sum_r[b] += r;
        sum_rr[b] += r * r;
        sum_xr[b] += ratio * r;
        counts[b] += 1;
    }

    let mut values = vec![Complex64::default(); bins];
    let mut cvs = vec![0.0; bins];
    let mut stds = vec![0.0; bins];
    let mut radii: Vec<f64> = (0..bins).map(|b| b as f64 * spacing).collect();
    for b in 0..bins {
        if counts[b] > 0 {
            let c = counts[b] as f64;
            radii[b] = sum_r[b] / c;
            let mean = sum[b] / c;
            // variance left after a linear fit in |ξ|, so the spread
            // measures angular rather than radial variation
            let var_r = sum_rr[b] / c - radii[b] * radii[b];
            let cov = sum_xr[b] / c - mean * radii[b];
            let trend = if var_r > 1e-12 * radii[b] * radii[b] {
                cov.norm_sqr() / var_r
            } else {
                0.0
            };
            let var = (sum_sq[b] / c - mean.norm_sqr() - trend).max(0.0);
            values[b] = mean;
            stds[b] = var.sqrt();
            cvs[b] = if mean.norm() > 0.0 {
                var.sqrt() / mean.norm()
            } else {
                f64::INFINITY
            };
        }
    }

    let resolved = resolved_limit(h, spacing).min(bins);
    let missing: Vec<usize> = (1..bins).filter(|&b| counts[b] == 0).collect();
    let missing_resolved = missing.iter().filter(|&&b| b < resolved).count();
    let resolved_count = resolved.saturating_sub(1).max(1);
    if missing_resolved as f64 > MAX_MISSING_FRACTION * resolved_count as f64 {
        return Err(Error::IllConditioned(format!(
            "{missing_resolved} of {resolved_count} resolved bins have no well-conditioned lattice points"
        )));
    }
    values[0] = zero_frequency_limit(&values, &radii, &counts, p.k());
    fill_missing(&mut values, &radii, &counts);

    let (mut im2, mut abs2) = (0.0, 0.0);
    for v in &values[1..resolved] {
        im2 += v.im * v.im;
        abs2 += v.norm_sqr();
    }
    let im_fraction = if abs2 > 0.0 { (im2 / abs2).sqrt() } else { 0.0 };
    if im_fraction > MAX_IMAGINARY_FRACTION {
        return Err(Error::IllConditioned(format!(
            "spectral ratio has relative imaginary part {im_fraction:.3e}"
        )));
    }
    Ok(RadialProfile {
        t,
        k: p.k(),
        d,
        h,
        l: spec.l(),
        spacing,
        resolved,
        radii,
        values,
        counts,
        cvs,
        stds,
    })
}

/// Limit at `r = 0` of the law `a + b r^k` through the two smallest populated bins.
///
/// The transform of the kernel inside the ball of radius `t` vanishes like
/// `(t r)^k` relative to `m_P`, which fixes the shape near the origin.
fn zero_frequency_limit(
    values: &[Complex64],
    radii: &[f64],
    counts: &[usize],
    k: usize,
) -> Complex64 {
    let mut populated = (1..values.len()).filter(|&b| counts[b] > 0);
    match (populated.next(), populated.next()) {
        (Some(a), Some(b)) => {
            let (ra, rb) = (radii[a].powi(k as i32), radii[b].powi(k as i32));
            let slope = (values[b] - values[a]) / (rb - ra);
            values[a] - slope * ra
        }
        (Some(a), None) => values[a],
        _ => Complex64::default(),
    }
}

/// Linear interpolation over empty bins, nearest value past the last populated bin.
fn fill_missing(values: &mut [Complex64], radii: &[f64], counts: &[usize]) {
    let known: Vec<usize> = std::iter::once(0)
        .chain((1..values.len()).filter(|&b| counts[b] > 0))
        .collect();
    if known.is_empty() {
        return;
    }
    for b in 1..values.len() {
        if counts[b] > 0 {
            continue;
        }
        let right = known.iter().copied().find(|&k| k > b);
        let left = known.iter().copied().rev().find(|&k| k < b);
        values[b] = match (left, right) {
            (Some(a), Some(c)) => {
                let w = (radii[b] - radii[a]) / (radii[c] - radii[a]);
                values[a] * (1.0 - w) + values[c] * w
            }
            (Some(a), None) => values[a],
            (None, Some(c)) => values[c],
            (None, None) => unreachable!(),
        };
    }
}

/// Applies the radial multiplier of `profile` to `g` on a zero-padded lattice.
pub fn apply_mkt(profile: &RadialProfile, g: &ScalarField) -> Result<ScalarField> {
    profile.check_geometry(g.spec())?;
    let lattice = PaddedLattice::new(*g.spec(), default_pad(g.spec()));
    let (out, _) = lattice.apply(g, |xi| {
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        Complex64::new(profile.value_at(r), 0.0)
    });
    Ok(out)
}

fn relative_difference(a: &ScalarField, b: &ScalarField, reference: f64) -> Result<f64> {
    if reference == 0.0 {
        return Ok(0.0);
    }
    Ok(a.sub(b)?.l2_norm() / reference)
}

/// `‖R_P^t f - M_k^t(R_P f)‖₂ / ‖f‖₂` with the profile built from `x_1 ⋯ x_k`.
///
/// `R_P f` and `M_k^t` are evaluated on the doubled box and cropped back,
/// since `R_P f` decays only polynomially. The box itself is used when the
/// doubled lattice exceeds the point budget.
pub fn factorization_residual(p: &SolidHarmonic, f: &ScalarField, t: f64) -> Result<f64> {
    let work = f.embed(2).map(|g| *g.spec()).unwrap_or(*f.spec());
    let profile = mt_profile(f.spec().d(), p.k(), t, &work)?;
    factorization_residual_with(p, f, &profile)
}

/// [`factorization_residual`] with a prebuilt profile for the box of `f`
/// or for its doubled box.
pub fn factorization_residual_with(
    p: &SolidHarmonic,
    f: &ScalarField,
    profile: &RadialProfile,
) -> Result<f64> {
    let ks = KernelSpec::new(p.clone())?;
    if p.k() != profile.k() {
        return Err(Error::InvalidArgument {
            arg: "p",
            reason: format!(
                "degree {} does not match the profile order {}",
                p.k(),
                profile.k()
            ),
        });
    }
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let direct = truncated_riesz_direct(&ks, f, profile.t())?;
    let work = if profile.check_geometry(f.spec()).is_ok() {
        f.clone()
    } else {
        f.embed(2)?
    };
    let factored = apply_mkt(profile, &riesz_apply(p, &work)?)?.crop_to(f.spec())?;
    relative_difference(&direct, &factored, norm)
}

/// Relative `L²` difference between `M_1^t f` and `-Σ_j R_j^t R_j f`.
pub fn m1t_identity_residual(f: &ScalarField, t: f64) -> Result<f64> {
    let d = f.spec().d();
    let profile = mt_profile(d, 1, t, f.spec())?;
    let lhs = apply_mkt(&profile, f)?;
    let rhs = minus_sum_rj_t_rj(f, t)?;
    relative_difference(&lhs, &rhs, lhs.l2_norm())
}

/// `-Σ_j R_j^t R_j f` over the coordinate directions.
pub fn minus_sum_rj_t_rj(f: &ScalarField, t: f64) -> Result<ScalarField> {
    let d = f.spec().d();
    let mut acc = ScalarField::zeros(*f.spec());
    for j in 1..=d {
        let p = monomial_harmonic(&MultiIndex::new(vec![j], d)?, false)?;
        let ks = KernelSpec::new(p.clone())?;
        acc = acc.sub(&truncated_of_riesz(&ks, &p, f, t)?)?;
    }
    Ok(acc)
}
