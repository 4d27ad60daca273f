//! Small numerical helpers shared across modules.

use statrs::function::gamma::ln_gamma;

/// Pairwise (cascade) summation in a fixed tree order.
///
/// Results depend only on the input order, never on scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise summation of `f(i)` for `i in 0..n` without materialising the terms.
pub fn pairwise_sum_by<F: Fn(usize) -> f64>(n: usize, f: &F) -> f64 {
    fn rec<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
        if hi - lo <= 32 {
            return (lo..hi).map(f).sum();
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    if n == 0 {
        0.0
    } else {
        rec(0, n, f)
    }
}

/// Natural log of the Gamma function for positive arguments.
pub fn lgamma(x: f64) -> f64 {
    ln_gamma(x)
}

/// Unnormalised surface area of the unit sphere in ℝ^d, `2π^{d/2}/Γ(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    (std::f64::consts::LN_2 + half * std::f64::consts::PI.ln() - lgamma(half)).exp()
}

/// Mean and standard error of a sample, both accumulated pairwise.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let ss = pairwise_sum_by(n, &|i| (xs[i] - mean).powi(2));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
