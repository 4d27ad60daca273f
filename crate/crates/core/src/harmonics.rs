//! Solid harmonics, distinct-index monomials and exact sphere moments.
//!
//! Polynomial coefficients are exact rationals so that harmonicity is an
//! exact test; floating point only appears on evaluation.
//!
//! # Polynomial text syntax
//!
//! ```text
//! poly    := term (('+' | '-') term)*
//! term    := ['-'] [coeff ['*']] factor (['*'] factor)*  |  ['-'] coeff
//! coeff   := integer | decimal | integer '/' integer
//! factor  := 'x' index ['^' exponent]
//! ```
//!
//! Whitespace between factors means multiplication, e.g. `2 x1^2 x3 - x2^3`
//! or `x1 x2^2 - x1 x3^2`. Variables are 1-based.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// A k-tuple of (1-based) coordinate axes in `1..=d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<usize>,
    d: usize,
}

impl MultiIndex {
    pub fn new(entries: Vec<usize>, d: usize) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument {
                arg: "entries",
                reason: "multi-index must have at least one entry".into(),
            });
        }
        if let Some(&bad) = entries.iter().find(|&&e| e == 0 || e > d) {
            return Err(Error::InvalidArgument {
                arg: "entries",
                reason: format!("axis {bad} outside 1..={d}"),
            });
        }
        Ok(Self { entries, d })
    }

    /// The canonical index `(1, 2, …, k)`.
    pub fn canonical(d: usize, k: usize) -> Result<Self> {
        Self::new((1..=k).collect(), d)
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// True when all entries differ, i.e. membership in the index set `I`.
    pub fn distinct(&self) -> bool {
        let mut seen = vec![false; self.d + 1];
        self.entries
            .iter()
            .all(|&e| !std::mem::replace(&mut seen[e], true))
    }

    /// `ω_{j1} ⋯ ω_{jk}` at a point.
    pub fn monomial_value(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&e| x[e - 1]).product()
    }

    fn exponents(&self) -> Vec<u32> {
        let mut exps = vec![0u32; self.d];
        for &e in &self.entries {
            exps[e - 1] += 1;
        }
        exps
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Polynomial in `d` variables with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    d: usize,
    terms: BTreeMap<Vec<u32>, Rational64>,
}

impl Polynomial {
    pub fn zero(d: usize) -> Self {
        Self {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms<I: IntoIterator<Item = (Vec<u32>, Rational64)>>(
        d: usize,
        terms: I,
    ) -> Result<Self> {
        let mut p = Self::zero(d);
        for (exps, c) in terms {
            if exps.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: exps.len(),
                });
            }
            p.add_term(exps, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, exps: Vec<u32>, c: Rational64) {
        let sum = self
            .terms
            .get(&exps)
            .copied()
            .unwrap_or_else(Rational64::zero)
            + c;
        if sum.is_zero() {
            self.terms.remove(&exps);
        } else {
            self.terms.insert(exps, sum);
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational64)> {
        self.terms.iter()
    }

    /// Common total degree, or `None` for the zero polynomial or mixed degrees.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degrees = self.terms.keys().map(|e| e.iter().sum::<u32>());
        let first = degrees.next()?;
        degrees.all(|g| g == first).then_some(first)
    }

    /// Exact symbolic Laplacian.
    pub fn laplacian(&self) -> Polynomial {
        let mut out = Polynomial::zero(self.d);
        for (exps, c) in &self.terms {
            for i in 0..self.d {
                let e = exps[i];
                if e >= 2 {
                    let mut next = exps.clone();
                    next[i] -= 2;
                    out.add_term(next, *c * Rational64::from_integer((e * (e - 1)) as i64));
                }
            }
        }
        out
    }

    pub fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(exps, c)| {
                let mono: f64 = exps
                    .iter()
                    .zip(x)
                    .map(|(&e, &v)| v.powi(e as i32))
                    .product();
                rational_to_f64(c) * mono
            })
            .sum()
    }

    /// Exact evaluation at a rational point.
    pub fn evaluate_exact(&self, x: &[Rational64]) -> Result<Rational64> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .fold(Rational64::zero(), |acc, (exps, c)| {
                let mono = exps
                    .iter()
                    .zip(x)
                    .fold(Rational64::one(), |m, (&e, v)| m * v.pow(e as i32));
                acc + *c * mono
            }))
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest-degree-first in x1, matching how people write them
        for (n, (exps, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (n, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let vars: Vec<String> = exps
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        format!("x{}", i + 1)
                    } else {
                        format!("x{}^{}", i + 1, e)
                    }
                })
                .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{}", vars.join(" "))?;
            } else {
                write!(f, "{mag} {}", vars.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Homogeneous polynomial of degree `k` in `d` variables.
///
/// Harmonicity is not enforced on construction; see [`is_harmonic`].
#[derive(Clone, Debug, PartialEq)]
pub struct SolidHarmonic {
    poly: Polynomial,
    k: usize,
    // floating copies for hot evaluation loops
    fast: Vec<(Vec<u32>, f64)>,
}

impl SolidHarmonic {
    pub fn new(poly: Polynomial) -> Result<Self> {
        let k = poly
            .homogeneous_degree()
            .ok_or_else(|| Error::InvalidArgument {
                arg: "poly",
                reason: format!("`{poly}` is zero or not homogeneous"),
            })?;
        if k == 0 {
            return Err(Error::InvalidArgument {
                arg: "poly",
                reason: "degree must be at least 1".into(),
            });
        }
        let fast = poly
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), rational_to_f64(c)))
            .collect();
        Ok(Self {
            poly,
            k: k as usize,
            fast,
        })
    }

    /// Parses the text syntax; `d` defaults to the largest variable index.
    pub fn parse(text: &str, d: Option<usize>) -> Result<Self> {
        Self::new(parse_polynomial(text, d)?)
    }

    /// The monomial `x_{j1} ⋯ x_{jk}` (repeats allowed, harmonic or not).
    pub fn monomial(j: &MultiIndex) -> Self {
        let poly = Polynomial::from_terms(j.d(), [(j.exponents(), Rational64::one())])
            .expect("exponent vector has length d");
        Self::new(poly).expect("monomial of degree ≥ 1")
    }

    pub fn d(&self) -> usize {
        self.poly.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(self.evaluate_unchecked(x))
    }

    pub fn evaluate_unchecked(&self, x: &[f64]) -> f64 {
        self.fast
            .iter()
            .map(|(exps, c)| {
                let mut m = *c;
                for (&e, &v) in exps.iter().zip(x) {
                    for _ in 0..e {
                        m *= v;
                    }
                }
                m
            })
            .sum()
    }

    /// `Σ |coefficient|`, an upper bound for `max_{|ω|=1} |P(ω)|`.
    pub fn coefficient_l1(&self) -> f64 {
        self.fast.iter().map(|(_, c)| c.abs()).sum()
    }
}

impl fmt::Display for SolidHarmonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.poly.fmt(f)
    }
}

/// The harmonic monomial `x_j` for `j ∈ I`.
///
/// Repeated axes are rejected. With `strict`, even orders are rejected too,
/// since the pipelines only use odd `k`.
pub fn monomial_harmonic(j: &MultiIndex, strict: bool) -> Result<SolidHarmonic> {
    if !j.distinct() {
        return Err(Error::RepeatedIndex {
            entries: j.entries().to_vec(),
        });
    }
    if strict && j.k().is_multiple_of(2) {
        return Err(Error::InvalidArgument {
            arg: "j",
            reason: format!("order k = {} is even; pipelines require odd k", j.k()),
        });
    }
    Ok(SolidHarmonic::monomial(j))
}

/// Exact harmonicity test; returns the Laplacian as the residual.
pub fn is_harmonic(p: &SolidHarmonic) -> (bool, Polynomial) {
    let residual = p.polynomial().laplacian();
    (residual.is_zero(), residual)
}

/// Dimension of the space of degree-k spherical harmonics on ℝ^d,
/// `C(d+k-1, k) - C(d+k-3, k-2)`.
pub fn dim_hk(d: usize, k: usize) -> u128 {
    let first = binomial(d as i64 + k as i64 - 1, k as i64);
    let second = binomial(d as i64 + k as i64 - 3, k as i64 - 2);
    first - second
}

fn binomial(n: i64, r: i64) -> u128 {
    if r < 0 || n < 0 || r > n {
        return 0;
    }
    let r = r.min(n - r) as u128;
    let n = n as u128;
    (0..r).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

/// Normalised sphere moment `∫_{S^{d-1}} ω_1² ⋯ ω_k² dω`.
///
/// Equals `Γ(d/2) / (2^k Γ(k + d/2)) = 1 / (d (d+2) ⋯ (d+2k-2))`.
pub fn sphere_moment(d: usize, k: usize) -> Result<f64> {
    check_k_le_d(d, k)?;
    Ok(1.0 / (0..k).map(|i| (d + 2 * i) as f64).product::<f64>())
}

/// Exact rational value of [`sphere_moment`].
pub fn sphere_moment_exact(d: usize, k: usize) -> Result<BigRational> {
    check_k_le_d(d, k)?;
    let den = (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(d + 2 * i));
    Ok(BigRational::new(BigInt::one(), den))
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

const MC_CHUNK: usize = 1 << 16;

/// Monte Carlo estimate of [`sphere_moment`] with its standard error.
///
/// Uniform sphere points come from normalised Gaussian vectors. Samples are
/// drawn in fixed-size chunks, each from its own ChaCha stream, and chunk
/// statistics are merged in chunk order.
pub fn sphere_moment_mc(d: usize, k: usize, samples: usize, seed: u64) -> Result<(f64, f64)> {
    check_k_le_d(d, k)?;
    if samples < 1000 {
        return Err(Error::InvalidArgument {
            arg: "samples",
            reason: format!("need at least 1000 samples, got {samples}"),
        });
    }
    let mut count = 0.0f64;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    let mut v = vec![0.0; d];
    for (chunk, start) in (0..samples).step_by(MC_CHUNK).enumerate() {
        let len = MC_CHUNK.min(samples - start);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk as u64);
        let (mut c_mean, mut c_m2) = (0.0f64, 0.0f64);
        for i in 0..len {
            for slot in v.iter_mut() {
                *slot = StandardNormal.sample(&mut rng);
            }
            let r2: f64 = v.iter().map(|a| a * a).sum();
            let x: f64 = v[..k].iter().map(|a| a * a / r2).product();
            let delta = x - c_mean;
            c_mean += delta / (i + 1) as f64;
            c_m2 += delta * (x - c_mean);
        }
        // merge the chunk (count, mean, m2) into the running totals
        let nb = len as f64;
        let total = count + nb;
        let delta = c_mean - mean;
        mean += delta * nb / total;
        m2 += c_m2 + delta * delta * count * nb / total;
        count = total;
    }
    let var = m2 / (count - 1.0);
    Ok((mean, (var / count).sqrt()))
}

/// `c(d,k) = (a(d,k) · sphere_moment(d,k))^{-1/2}`, the factor making
/// `Y_j = c(d,k) x_j` satisfy `∫|Y_j|² dω = 1/a(d,k)`.
pub fn yj_normalization(d: usize, k: usize) -> Result<f64> {
    let moment = sphere_moment(d, k)?;
    let a = dim_hk(d, k) as f64;
    Ok((a * moment).powf(-0.5))
}

fn rational_to_f64(r: &Rational64) -> f64 {
    r.to_f64()
        .unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}

fn parse_polynomial(text: &str, d: Option<usize>) -> Result<Polynomial> {
    let err = |reason: String| Error::Parse {
        input: text.to_string(),
        reason,
    };
    let tokens = tokenize(text).map_err(err)?;
    let mut terms: Vec<(BTreeMap<usize, u32>, Rational64)> = Vec::new();
    let mut i = 0;
    let mut sign = Rational64::one();
    let mut expect_term = true;
    let mut coeff: Option<Rational64> = None;
    let mut factors: BTreeMap<usize, u32> = BTreeMap::new();
    let flush = |coeff: &mut Option<Rational64>,
                 factors: &mut BTreeMap<usize, u32>,
                 sign: Rational64,
                 terms: &mut Vec<(BTreeMap<usize, u32>, Rational64)>| {
        let c = coeff.take().unwrap_or_else(Rational64::one) * sign;
        terms.push((std::mem::take(factors), c));
    };
    while i < tokens.len() {
        match &tokens[i] {
            Token::Plus | Token::Minus => {
                let s = if matches!(tokens[i], Token::Minus) {
                    -Rational64::one()
                } else {
                    Rational64::one()
                };
                if expect_term {
                    if coeff.is_some() || !factors.is_empty() {
                        return Err(err("dangling sign".into()));
                    }
                    sign *= s;
                } else {
                    flush(&mut coeff, &mut factors, sign, &mut terms);
                    sign = s;
                    expect_term = true;
                }
            }
            Token::Number(r) => {
                if coeff.is_some() || !factors.is_empty() {
                    return Err(err(
                        "coefficient must precede the variables of a term".into()
                    ));
                }
                coeff = Some(*r);
                expect_term = false;
            }
            Token::Var(v, e) => {
                *factors.entry(*v).or_insert(0) += e;
                expect_term = false;
            }
            Token::Star => {
                if expect_term {
                    return Err(err("`*` without a left operand".into()));
                }
            }
        }
        i += 1;
    }
    if expect_term {
        return Err(err("expected a term".into()));
    }
    flush(&mut coeff, &mut factors, sign, &mut terms);

    let max_var = terms
        .iter()
        .flat_map(|(f, _)| f.keys().copied())
        .max()
        .unwrap_or(0);
    let dim = match d {
        Some(d) if max_var > d => {
            return Err(err(format!("variable x{max_var} exceeds dimension {d}")));
        }
        Some(d) => d,
        None => max_var.max(1),
    };
    let mut poly = Polynomial::zero(dim);
    for (factors, c) in terms {
        let mut exps = vec![0u32; dim];
        for (v, e) in factors {
            exps[v - 1] += e;
        }
        poly.add_term(exps, c);
    }
    Ok(poly)
}

enum Token {
    Plus,
    Minus,
    Star,
    Number(Rational64),
    Var(usize, u32),
}

fn tokenize(text: &str) -> std::result::Result<Vec<Token>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let read_digits = |i: &mut usize| -> String {
        let start = *i;
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
        chars[start..*i].iter().collect()
    };
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            'x' | 'X' => {
                i += 1;
                let idx = read_digits(&mut i);
                let v: usize = idx
                    .parse()
                    .map_err(|_| "expected variable index after `x`".to_string())?;
                if v == 0 {
                    return Err("variables are 1-based".into());
                }
                let mut e = 1u32;
                if i < chars.len() && chars[i] == '^' {
                    i += 1;
                    let digits = read_digits(&mut i);
                    e = digits
                        .parse()
                        .map_err(|_| "expected exponent after `^`".to_string())?;
                }
                out.push(Token::Var(v, e));
            }
            '0'..='9' | '.' => {
                let int = read_digits(&mut i);
                let mut value = Rational64::from_integer(if int.is_empty() {
                    0
                } else {
                    int.parse::<i64>().map_err(|e| e.to_string())?
                });
                if i < chars.len() && chars[i] == '.' {
                    i += 1;
                    let frac = read_digits(&mut i);
                    if !frac.is_empty() {
                        let num: i64 = frac
                            .parse()
                            .map_err(|e: std::num::ParseIntError| e.to_string())?;
                        let den = 10i64
                            .checked_pow(frac.len() as u32)
                            .ok_or_else(|| "too many decimal digits".to_string())?;
                        value += Rational64::new(num, den);
                    }
                } else if i < chars.len() && chars[i] == '/' {
                    i += 1;
                    let den = read_digits(&mut i);
                    let den: i64 = den
                        .parse()
                        .map_err(|_| "expected denominator after `/`".to_string())?;
                    if den == 0 {
                        return Err("zero denominator".into());
                    }
                    value /= Rational64::from_integer(den);
                }
                out.push(Token::Number(value));
            }
            other => return Err(format!("unexpected character `{other}`")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn idx(entries: &[usize], d: usize) -> MultiIndex {
        MultiIndex::new(entries.to_vec(), d).unwrap()
    }

    #[test]
    fn distinct_monomials_are_harmonic() {
        let p = monomial_harmonic(&idx(&[1, 2, 3], 3), true).unwrap();
        assert!(is_harmonic(&p).0);
        assert_eq!(p.to_string(), "x1 x2 x3");
    }

    #[test]
    fn monomial_guards() {
        assert!(matches!(
            monomial_harmonic(&idx(&[1, 1, 2], 3), false),
            Err(Error::RepeatedIndex { .. })
        ));
        assert!(monomial_harmonic(&idx(&[2, 4], 5), true).is_err());
        assert!(monomial_harmonic(&idx(&[2, 4], 5), false).is_ok());
        assert!(MultiIndex::new(vec![4], 3).is_err());
        assert!(MultiIndex::new(vec![0], 3).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let cube = SolidHarmonic::parse("x1^3", Some(3)).unwrap();
        let (ok, residual) = is_harmonic(&cube);
        assert!(!ok);
        assert_eq!(residual.to_string(), "6 x1");

        let p = SolidHarmonic::parse("x1 x2^2 - x1 x3^2", Some(3)).unwrap();
        assert!(is_harmonic(&p).0);
    }

    #[test]
    fn evaluation_examples() {
        let p = SolidHarmonic::parse("x1 x2 x3", None).unwrap();
        assert_eq!(p.evaluate(&[1.0, 2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(p.evaluate(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        let q = SolidHarmonic::parse("x1 x2^2 - x1 x3^2", None).unwrap();
        assert_eq!(q.evaluate(&[2.0, 1.0, 1.0]).unwrap(), 0.0);
        assert!(q.evaluate(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn parser_grammar() {
        let p = SolidHarmonic::parse("2 x1^2 x3 - x2^3", None).unwrap();
        assert_eq!(p.d(), 3);
        assert_eq!(p.k(), 3);
        assert_eq!(p.evaluate(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        let q = SolidHarmonic::parse("-1/2*x1 + 0.25 x2", Some(4)).unwrap();
        assert_eq!(q.d(), 4);
        assert_eq!(q.evaluate(&[2.0, 4.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(
            SolidHarmonic::parse("x1 + x1^2", None).is_err(),
            "mixed degree"
        );
        assert!(
            SolidHarmonic::parse("x1 - x1", None).is_err(),
            "zero polynomial"
        );
        assert!(SolidHarmonic::parse("x1 +", None).is_err());
        assert!(SolidHarmonic::parse("x0", None).is_err());
        assert!(SolidHarmonic::parse("x4", Some(3)).is_err());
        assert!(SolidHarmonic::parse("y1", None).is_err());
    }

    #[test]
    fn dimensions_of_harmonic_spaces() {
        assert_eq!(dim_hk(3, 1), 3);
        assert_eq!(dim_hk(3, 3), 7);
        assert_eq!(dim_hk(2, 3), 2);
        assert_eq!(dim_hk(1, 1), 1);
        assert_eq!(dim_hk(1, 3), 0);
        assert_eq!(dim_hk(3, 2), 5);
    }

    #[test]
    fn moment_examples() {
        assert_eq!(sphere_moment(2, 1).unwrap(), 0.5);
        assert!((sphere_moment(3, 1).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!((sphere_moment(3, 3).unwrap() - 1.0 / 105.0).abs() < 1e-18);
        assert_eq!(
            sphere_moment_exact(3, 3).unwrap(),
            BigRational::new(BigInt::one(), BigInt::from(105))
        );
        assert!(sphere_moment(2, 3).is_err());
    }

    #[test]
    fn moment_matches_gamma_form() {
        // Γ(d/2) / (2^k Γ(k + d/2)) via log-gamma
        for d in 1..=12usize {
            for k in 1..=d.min(5) {
                let half = d as f64 / 2.0;
                let g = (crate::numerics::lgamma(half) - crate::numerics::lgamma(k as f64 + half))
                    .exp()
                    / 2f64.powi(k as i32);
                let m = sphere_moment(d, k).unwrap();
                assert!(((g - m) / m).abs() < 1e-12, "d={d} k={k}");
            }
        }
    }

    #[test]
    fn moment_from_gaussian_integral() {
        // J = Γ(3/2)^k Γ(1/2)^{d-k} and J = S_{d-1} · moment · Γ(k + d/2) / 2
        use crate::numerics::{lgamma, sphere_area};
        for (d, k) in [(3usize, 1usize), (3, 3), (5, 3), (8, 3), (10, 5)] {
            let ln_j = k as f64 * lgamma(1.5) + (d - k) as f64 * lgamma(0.5);
            let moment =
                (ln_j - sphere_area(d).ln() - lgamma(k as f64 + d as f64 / 2.0)).exp() * 2.0;
            let closed = sphere_moment(d, k).unwrap();
            assert!(((moment - closed) / closed).abs() < 1e-12, "d={d} k={k}");
        }
    }

    #[test]
    fn monte_carlo_moments() {
        let (est, se) = sphere_moment_mc(3, 3, 1_000_000, 7).unwrap();
        assert!(((est - 1.0 / 105.0) / se).abs() < 4.0, "{est} ± {se}");
        let (est, se) = sphere_moment_mc(2, 1, 100_000, 7).unwrap();
        assert!(((est - 0.5) / se).abs() < 4.0, "{est} ± {se}");
        assert_eq!(
            sphere_moment_mc(2, 1, 100_000, 7).unwrap(),
            sphere_moment_mc(2, 1, 100_000, 7).unwrap()
        );
        assert!(sphere_moment_mc(2, 1, 999, 7).is_err());
    }

    #[test]
    fn k1_trace_identity() {
        for d in 1..=20 {
            let total: f64 = (0..d).map(|_| sphere_moment(d, 1).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn yj_normalisation_examples() {
        for d in 1..=10 {
            assert!((yj_normalization(d, 1).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((yj_normalization(3, 3).unwrap() - 15f64.sqrt()).abs() < 1e-12);
        for (d, k) in [(3usize, 3usize), (5, 3), (7, 5)] {
            let c = yj_normalization(d, k).unwrap();
            let v = c * c * dim_hk(d, k) as f64 * sphere_moment(d, k).unwrap();
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn evaluation_is_k_homogeneous(a in -20i64..20, b in -20i64..20, c in -20i64..20) {
            let p = SolidHarmonic::parse("3 x1^2 x3 - x2^3 + 1/2 x1 x2 x3", None).unwrap();
            let x = [Rational64::from_integer(a), Rational64::new(b, 3), Rational64::new(c, 7)];
            let two_x: Vec<Rational64> = x.iter().map(|v| *v * 2).collect();
            let lhs = p.polynomial().evaluate_exact(&two_x).unwrap();
            let rhs = p.polynomial().evaluate_exact(&x).unwrap() * 8;
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn every_distinct_index_gives_a_harmonic(d in 1usize..7, seed in 0u64..1000) {
            let k = 1 + (seed as usize % d);
            let mut axes: Vec<usize> = (1..=d).collect();
            // deterministic shuffle
            for i in (1..axes.len()).rev() {
                axes.swap(i, (seed as usize * 31 + i * 17) % (i + 1));
            }
            let j = MultiIndex::new(axes[..k].to_vec(), d).unwrap();
            prop_assert!(j.distinct());
            prop_assert!(is_harmonic(&monomial_harmonic(&j, false).unwrap()).0);
        }
    }
}
