//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use riesz_core::grid::ScalarField;

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `(1/π) ∫_{|s|>t} g(x - s) / s ds` for a `g` negligible beyond `reach`.
pub fn truncated_hilbert_1d<G: Fn(f64) -> f64>(g: &G, x: f64, t: f64, reach: f64) -> f64 {
    let upper = x.abs() + reach;
    if upper <= t {
        return 0.0;
    }
    let integrand = |s: f64| (g(x - s) - g(x + s)) / s;
    // split at the bulk of g so the adaptive rule sees both sides
    let mut knots = vec![t];
    for c in [(x - reach).abs(), x.abs(), x.abs() + 1.0] {
        if c > t && c < upper {
            knots.push(c);
        }
    }
    knots.push(upper);
    knots.sort_by(f64::total_cmp);
    knots
        .windows(2)
        .map(|w| adaptive_simpson(&integrand, w[0], w[1], 1e-12))
        .sum::<f64>()
        / std::f64::consts::PI
}

/// Sine integral `Si(x) = ∫_0^x sin(u)/u du`.
pub fn sine_integral(x: f64) -> f64 {
    let sinc = |u: f64| if u == 0.0 { 1.0 } else { u.sin() / u };
    let pieces = (x.abs() / std::f64::consts::PI).ceil().max(1.0) as usize;
    let step = x / pieces as f64;
    (0..pieces)
        .map(|i| adaptive_simpson(&sinc, i as f64 * step, (i + 1) as f64 * step, 1e-13))
        .sum()
}

/// Symbol of the 1-D truncated Hilbert transform against that of `H`,
/// `1 - (2/π) Si(2π t |ξ|)`.
pub fn truncated_hilbert_symbol_ratio(t: f64, xi: f64) -> f64 {
    1.0 - 2.0 / std::f64::consts::PI * sine_integral(2.0 * std::f64::consts::PI * t * xi.abs())
}

/// Exponent vectors of all degree-`k` monomials in `d` variables.
pub fn monomials(d: usize, k: usize) -> Vec<Vec<u32>> {
    fn rec(d: usize, left: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == d {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=left).rev() {
            prefix.push(e);
            rec(d, left - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, k as u32, &mut Vec::new(), &mut out);
    out
}

/// Dimension of the kernel of `Δ` on degree-`k` homogeneous polynomials,
/// by exact elimination on the Laplacian matrix.
pub fn laplacian_nullity(d: usize, k: usize) -> usize {
    let cols = monomials(d, k);
    if k < 2 {
        return cols.len();
    }
    let rows = monomials(d, k - 2);
    let mut m: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); cols.len()]; rows.len()];
    for (c, exps) in cols.iter().enumerate() {
        for i in 0..d {
            let e = exps[i];
            if e >= 2 {
                let mut target = exps.clone();
                target[i] -= 2;
                let r = rows.iter().position(|x| *x == target).unwrap();
                m[r][c] += BigRational::from_integer(BigInt::from(e * (e - 1)));
            }
        }
    }
    cols.len() - rank(m)
}

fn rank(mut m: Vec<Vec<BigRational>>) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot_row = m[rank].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != rank && !row[c].is_zero() {
                let factor = &row[c] / &pivot_row[c];
                for (x, v) in row.iter_mut().zip(&pivot_row).skip(c) {
                    *x -= &factor * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// All `k`-tuples over `1..=d` with pairwise distinct entries, by filtering
/// the full product.
pub fn brute_force_index_set(d: usize, k: usize) -> Vec<Vec<usize>> {
    let total = d.pow(k as u32);
    (0..total)
        .map(|mut code| {
            (0..k)
                .map(|_| {
                    let v = code % d + 1;
                    code /= d;
                    v
                })
                .collect::<Vec<_>>()
        })
        .filter(|t| (0..k).all(|a| (a + 1..k).all(|b| t[a] != t[b])))
        .collect()
}

/// `d! / (d-k)!` as an exact integer.
pub fn falling_factorial(d: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(d - i))
}

/// `‖a - b‖₂ / ‖b‖₂`.
pub fn rel_l2(a: &ScalarField, b: &ScalarField) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm()
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
