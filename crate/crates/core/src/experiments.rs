//! Ratio studies across dimensions: `‖R_P^* f‖_p / ‖R_P f‖_p`, its square
//! function analogue, and dimension sweeps written as CSV.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::averaging::{a_tilde, c_dk, AveragingReport};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, make_grid, test_function, GridSpec, ScalarField, TestFunction};
use crate::harmonics::{monomial_harmonic, MultiIndex, SolidHarmonic};
use crate::operators::{maximal_riesz, riesz_apply, KernelSpec, TruncationGrid};
use crate::rotations::constant_asymptotic_ratio;

/// Smallest `‖R_P f‖_p` accepted as a denominator.
pub const DENOMINATOR_FLOOR: f64 = 1e-8;

/// Fixed CSV header of every report.
pub const CSV_HEADER: [&str; 8] = ["d", "k", "p", "quantity", "value", "stderr", "grid", "seed"];

/// Grid size for one dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub n: usize,
    pub l: f64,
}

/// Default grid for dimension `d`: half-width 8, spacing `1/4` up to
/// `d = 3`, then as fine as the point budget allows.
pub fn default_grid(d: usize) -> GridParams {
    let n = match d {
        1..=3 => 64,
        4 => 16,
        5 => 12,
        _ => 8,
    };
    GridParams { n, l: 8.0 }
}

/// Truncation radii: `count` log-spaced points in `[lo, hi]`, defaulting
/// to `[2h, l/2]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TGridParams {
    pub count: usize,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
}

impl Default for TGridParams {
    fn default() -> Self {
        Self {
            count: 16,
            lo: None,
            hi: None,
        }
    }
}

impl TGridParams {
    pub fn build(&self, spec: &GridSpec) -> Result<TruncationGrid> {
        let lo = self.lo.unwrap_or(2.0 * spec.h());
        let hi = self.hi.unwrap_or(spec.l() / 2.0);
        let ts = TruncationGrid::log_spaced(lo, hi, self.count)?;
        ts.validate_for(spec)?;
        Ok(ts)
    }
}

/// The default corpus: centred and shifted Gaussians, a Gaussian times
/// `x_1`, and two band-limited fields seeded from `seed`.
pub fn default_corpus(seed: u64) -> Vec<TestFunction> {
    vec![
        TestFunction::Gaussian { sigma: 1.0 },
        TestFunction::ShiftedGaussian {
            center: vec![0.5],
            sigma: 0.8,
        },
        TestFunction::GaussianTimesPoly {
            sigma: 1.0,
            poly: "x1".into(),
        },
        TestFunction::RandomBandLimited {
            sigma: 1.0,
            cutoff: 1.0,
            modes: 8,
            seed,
        },
        TestFunction::RandomBandLimited {
            sigma: 1.0,
            cutoff: 1.0,
            modes: 8,
            seed: seed.wrapping_add(1),
        },
    ]
}

/// Parameters of a dimension sweep, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub k: usize,
    pub d_values: Vec<usize>,
    pub p_list: Vec<f64>,
    /// Per-dimension grid overrides; missing dimensions use [`default_grid`].
    #[serde(default)]
    pub grids: BTreeMap<usize, GridParams>,
    #[serde(default)]
    pub t_grid: TGridParams,
    /// Empty means [`default_corpus`] with the config seed.
    #[serde(default)]
    pub corpus: Vec<TestFunction>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |arg, reason: String| Err(Error::InvalidArgument { arg, reason });
        if self.k.is_multiple_of(2) {
            return bad("k", format!("k must be odd, got {}", self.k));
        }
        if self.d_values.is_empty() || self.p_list.is_empty() {
            return bad(
                "d_values",
                "need at least one dimension and one exponent".into(),
            );
        }
        if let Some(d) = self.d_values.iter().find(|&&d| d < self.k) {
            return bad("d_values", format!("dimension {d} is below k = {}", self.k));
        }
        if let Some(p) = self.p_list.iter().find(|&&p| !(p > 1.0 && p.is_finite())) {
            return bad("p_list", format!("exponents must lie in (1, ∞), got {p}"));
        }
        if self.t_grid.count == 0 {
            return bad("t_grid", "need at least one truncation radius".into());
        }
        for &d in &self.d_values {
            self.grid_for(d)?;
        }
        Ok(())
    }

    pub fn grid_for(&self, d: usize) -> Result<GridSpec> {
        let g = self
            .grids
            .get(&d)
            .copied()
            .unwrap_or_else(|| default_grid(d));
        make_grid(d, g.n, g.l)
    }

    pub fn corpus(&self) -> Vec<TestFunction> {
        if self.corpus.is_empty() {
            default_corpus(self.seed)
        } else {
            self.corpus.clone()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub d: usize,
    pub k: usize,
    pub p: f64,
    pub quantity: String,
    pub value: f64,
    pub stderr: f64,
    pub grid: String,
    pub seed: u64,
}

impl ReportRow {
    pub fn from_averaging(report: &AveragingReport, spec: &GridSpec, seed: u64) -> Self {
        Self {
            d: report.d,
            k: report.k,
            p: 2.0,
            quantity: format!(
                "averaging_residual:t={}:rotations={}",
                report.t, report.rotations_used
            ),
            value: report.residual,
            stderr: report.stderr,
            grid: grid_descriptor(spec, None),
            seed,
        }
    }

    fn fields(&self) -> [String; 8] {
        [
            self.d.to_string(),
            self.k.to_string(),
            float(self.p),
            self.quantity.clone(),
            float(self.value),
            float(self.stderr),
            self.grid.clone(),
            self.seed.to_string(),
        ]
    }
}

/// Seventeen significant digits; non-finite values as `NaN`, `inf`, `-inf`.
fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn grid_descriptor(spec: &GridSpec, ts: Option<&TruncationGrid>) -> String {
    let base = format!("n{}:l{}", spec.n(), spec.l());
    match ts {
        Some(ts) => format!("{base}:nt{}", ts.len()),
        None => base,
    }
}

/// Rows of a sweep in deterministic order.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EstimateReport {
    pub rows: Vec<ReportRow>,
}

impl EstimateReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(CSV_HEADER).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.fields()).map_err(io)?;
        }
        Ok(w.flush()?)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(std::io::Error::other(e)))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Rows whose quantity starts with `ratio:`.
    pub fn ratio_rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.quantity.starts_with("ratio:"))
    }

    /// Largest finite ratio for each dimension, in increasing `d`.
    pub fn max_ratio_by_d(&self) -> Vec<(usize, f64)> {
        let mut best: BTreeMap<usize, f64> = BTreeMap::new();
        for row in self.ratio_rows().filter(|r| r.value.is_finite()) {
            let slot = best.entry(row.d).or_insert(f64::NEG_INFINITY);
            *slot = slot.max(row.value);
        }
        best.into_iter().collect()
    }

    /// `max/min - 1` over the per-dimension maxima; NaN with fewer than
    /// two dimensions.
    pub fn max_ratio_variation(&self) -> f64 {
        let maxima = self.max_ratio_by_d();
        if maxima.len() < 2 {
            return f64::NAN;
        }
        let hi = maxima.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
        let lo = maxima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
        hi / lo - 1.0
    }
}

fn denominator(value: f64) -> Result<f64> {
    if value > DENOMINATOR_FLOOR {
        Ok(value)
    } else {
        Err(Error::Degenerate(format!(
            "‖R_P f‖_p = {value:.3e} is below the floor {DENOMINATOR_FLOOR:e}"
        )))
    }
}

/// `‖R_P^* f‖_p / ‖R_P f‖_p` with the maximal operator over `ts`.
pub fn single_ratio(
    p: &SolidHarmonic,
    f: &ScalarField,
    exponent: f64,
    ts: &TruncationGrid,
) -> Result<f64> {
    let ks = KernelSpec::new(p.clone())?;
    let full = riesz_apply(p, f)?;
    let den = denominator(lp_norm(&full, exponent)?)?;
    let star = maximal_riesz(&ks, f, ts)?;
    Ok(lp_norm(&star, exponent)? / den)
}

/// `‖(Σ_s |R_{P_s}^* f_s|²)^{1/2}‖_p / ‖(Σ_s |R_{P_s} f_s|²)^{1/2}‖_p`.
pub fn vector_ratio(
    family: &[SolidHarmonic],
    fs: &[ScalarField],
    exponent: f64,
    ts: &TruncationGrid,
) -> Result<f64> {
    if family.is_empty() || family.len() != fs.len() {
        return Err(Error::InvalidArgument {
            arg: "family",
            reason: format!(
                "need equally many harmonics and fields, got {} and {}",
                family.len(),
                fs.len()
            ),
        });
    }
    let spec = *fs[0].spec();
    let mut num = ScalarField::zeros(spec);
    let mut den = ScalarField::zeros(spec);
    for (p, f) in family.iter().zip(fs) {
        f.spec().check_same(&spec)?;
        let ks = KernelSpec::new(p.clone())?;
        let star = maximal_riesz(&ks, f, ts)?;
        let full = riesz_apply(p, f)?;
        num = num.zip_with(&star, |a, b| a + b * b)?;
        den = den.zip_with(&full, |a, b| a + b * b)?;
    }
    let d_norm = denominator(lp_norm(&den.map(f64::sqrt), exponent)?)?;
    Ok(lp_norm(&num.map(f64::sqrt), exponent)? / d_norm)
}

/// Ratios for every `(d, p, f)` of the config over `P = x_1 ⋯ x_k`, plus
/// `|ã|`, `|C(d,k)|`, the scaled rotations constant and the largest ratio
/// per dimension. Failing cells become NaN rows.
pub fn dimension_sweep(config: &ExperimentConfig) -> Result<EstimateReport> {
    config.validate()?;
    let k = config.k;
    let corpus = config.corpus();
    let mut report = EstimateReport::default();
    for &d in &config.d_values {
        let spec = config.grid_for(d)?;
        let ts = config.t_grid.build(&spec).map_err(|e| e.to_string());
        let grid = grid_descriptor(&spec, ts.as_ref().ok());
        let row = |p: f64, quantity: String, value: f64| ReportRow {
            d,
            k,
            p,
            quantity,
            value,
            stderr: f64::NAN,
            grid: grid.clone(),
            seed: config.seed,
        };
        // both norms of every corpus field, shared across exponents
        let fields: Vec<std::result::Result<(ScalarField, ScalarField), String>> = corpus
            .iter()
            .map(|kind| {
                let ts = ts.as_ref().map_err(|e| Error::InvalidArgument {
                    arg: "t_grid",
                    reason: e.clone(),
                })?;
                let p = monomial_harmonic(&MultiIndex::canonical(d, k)?, true)?;
                let ks = KernelSpec::new(p.clone())?;
                let f = test_function(&spec, kind, false)?;
                Ok((riesz_apply(&p, &f)?, maximal_riesz(&ks, &f, ts)?))
            })
            .map(|cell: Result<_>| cell.map_err(|e| e.to_string()))
            .collect();
        let mut best = f64::NEG_INFINITY;
        for &p in &config.p_list {
            for (kind, cell) in corpus.iter().zip(&fields) {
                let value = cell
                    .as_ref()
                    .map_err(Clone::clone)
                    .and_then(|(full, star)| {
                        let ratio = || -> Result<f64> {
                            Ok(lp_norm(star, p)? / denominator(lp_norm(full, p)?)?)
                        };
                        ratio().map_err(|e| e.to_string())
                    });
                let value = value.unwrap_or_else(|e| {
                    log::warn!("d = {d}, p = {p}, {}: {e}", kind.name());
                    f64::NAN
                });
                if value.is_finite() {
                    best = best.max(value);
                }
                report
                    .rows
                    .push(row(p, format!("ratio:{}", kind.name()), value));
            }
        }
        let scalar = |r: Result<f64>| r.unwrap_or(f64::NAN);
        report.rows.push(row(
            f64::NAN,
            "a_tilde_abs".into(),
            scalar(a_tilde(d, k).map(f64::abs)),
        ));
        report.rows.push(row(
            f64::NAN,
            "c_dk_abs".into(),
            scalar(c_dk(d, k).map(f64::abs)),
        ));
        report.rows.push(row(
            f64::NAN,
            "rotations_constant_ratio".into(),
            scalar(constant_asymptotic_ratio(&[d], k).map(|v| v[0])),
        ));
        let best = if best.is_finite() { best } else { f64::NAN };
        report.rows.push(row(f64::NAN, "max_ratio".into(), best));
    }
    Ok(report)
}
