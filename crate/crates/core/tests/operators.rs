mod common;

use proptest::prelude::*;

use riesz_core::grid::{make_grid, test_function, GridSpec, ScalarField, TestFunction};
use riesz_core::harmonics::SolidHarmonic;
use riesz_core::operators::{
    directional_hilbert_truncated, maximal_hilbert_1d, maximal_riesz, riesz_apply,
    truncated_riesz_direct, KernelSpec, TruncationGrid,
};

fn gaussian(spec: &GridSpec, sigma: f64) -> ScalarField {
    test_function(spec, &TestFunction::Gaussian { sigma }, true).unwrap()
}

fn band_limited(spec: &GridSpec, seed: u64, cutoff: f64) -> ScalarField {
    let kind = TestFunction::RandomBandLimited {
        sigma: 1.0,
        cutoff,
        modes: 6,
        seed,
    };
    test_function(spec, &kind, false).unwrap()
}

fn hilbert_oracle(spec: &GridSpec, t: f64) -> ScalarField {
    let g = |x: f64| (-x * x / 2.0).exp();
    ScalarField::from_fn(*spec, |x| common::truncated_hilbert_1d(&g, x[0], t, 12.0))
}

fn x1(d: usize) -> KernelSpec {
    KernelSpec::new(SolidHarmonic::parse("x1", Some(d)).unwrap()).unwrap()
}

#[test]
fn one_dimensional_truncation_matches_adaptive_quadrature() {
    let spec = make_grid(1, 256, 8.0).unwrap();
    let f = gaussian(&spec, 1.0);
    let got = truncated_riesz_direct(&x1(1), &f, 0.5).unwrap();
    let err = common::rel_l2(&got, &hilbert_oracle(&spec, 0.5));
    assert!(err < 1e-2, "relative error {err}");
}

#[test]
fn directional_hilbert_reduces_to_truncated_riesz_in_one_dimension() {
    let spec = make_grid(1, 128, 8.0).unwrap();
    let f = gaussian(&spec, 1.0);
    for t in [0.25, 0.5, 1.0, 2.0] {
        let h = directional_hilbert_truncated(&f, &[1.0], t).unwrap();
        let direct = truncated_riesz_direct(&x1(1), &f, t).unwrap();
        let err = common::rel_l2(&h, &direct);
        assert!(err < 1e-2, "t = {t}: relative error {err}");
    }
}

#[test]
fn maximal_hilbert_is_bounded_by_the_oracle() {
    let spec = make_grid(1, 128, 8.0).unwrap();
    let f = gaussian(&spec, 1.0);
    let ts = TruncationGrid::log_spaced(2.0 * spec.h(), spec.l() / 2.0, 8).unwrap();
    let out = maximal_hilbert_1d(&f, &ts).unwrap();
    assert!(out.values().iter().all(|v| v.is_finite()));
    let bound = ts
        .values()
        .iter()
        .map(|&t| hilbert_oracle(&spec, t).max_abs())
        .fold(0.0, f64::max);
    assert!(out.max_abs() <= 1.1 * bound, "{} vs {bound}", out.max_abs());
}

#[test]
fn truncation_residual_shrinks_as_t_decreases() {
    let spec = make_grid(2, 64, 8.0).unwrap();
    let f = band_limited(&spec, 3, 0.25);
    let p = SolidHarmonic::parse("x1", Some(2)).unwrap();
    let full = riesz_apply(&p, &f).unwrap();
    let ks = KernelSpec::new(p).unwrap();
    let residuals: Vec<f64> = [4.0, 2.0, 1.0, 0.75, 0.5]
        .iter()
        .map(|&t| common::rel_l2(&truncated_riesz_direct(&ks, &f, t).unwrap(), &full))
        .collect();
    assert!(
        residuals.windows(2).all(|w| w[1] < w[0]),
        "residuals {residuals:?}"
    );
}

#[test]
fn truncated_transform_vanishes_beyond_the_diameter() {
    let spec = make_grid(2, 16, 4.0).unwrap();
    let f = gaussian(&spec, 0.5);
    let out = truncated_riesz_direct(&x1(2), &f, spec.diameter() + 1.0).unwrap();
    assert_eq!(out.max_abs(), 0.0);
}

fn grid_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(0u32..40, 1..6)
        .prop_map(|s| s.into_iter().map(|i| 1.0 + i as f64 * 0.075).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn maximal_operator_dominates_every_truncation(values in grid_values(), seed in 0u64..50) {
        let spec = make_grid(2, 32, 8.0).unwrap();
        let f = band_limited(&spec, seed, 1.0);
        let ks = x1(2);
        let ts = TruncationGrid::new(values.clone()).unwrap();
        let max = maximal_riesz(&ks, &f, &ts).unwrap();
        for &t in &values {
            let g = truncated_riesz_direct(&ks, &f, t).unwrap();
            for (m, v) in max.values().iter().zip(g.values()) {
                prop_assert!(*m >= v.abs());
            }
        }
    }

    #[test]
    fn enlarging_the_grid_never_lowers_the_maximum(
        small in grid_values(),
        extra in grid_values(),
        seed in 0u64..50,
    ) {
        let spec = make_grid(2, 32, 8.0).unwrap();
        let f = band_limited(&spec, seed, 1.0);
        let ks = x1(2);
        let a = TruncationGrid::new(small).unwrap();
        let b = a.merged(&TruncationGrid::new(extra).unwrap()).unwrap();
        let lo = maximal_riesz(&ks, &f, &a).unwrap();
        let hi = maximal_riesz(&ks, &f, &b).unwrap();
        for (x, y) in lo.values().iter().zip(hi.values()) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn truncated_transforms_are_skew_adjoint(
        sf in 0u64..100,
        sg in 100u64..200,
        t in 1.0f64..3.0,
        which in 0usize..3,
    ) {
        let spec = make_grid(2, 32, 8.0).unwrap();
        let f = band_limited(&spec, sf, 1.0);
        let g = band_limited(&spec, sg, 1.0);
        let text = ["x1", "x2", "x1^3 - 3 x1 x2^2"][which];
        let ks = KernelSpec::new(SolidHarmonic::parse(text, Some(2)).unwrap()).unwrap();
        let rf = truncated_riesz_direct(&ks, &f, t).unwrap();
        let rg = truncated_riesz_direct(&ks, &g, t).unwrap();
        let lhs = rf.inner(&g).unwrap();
        let rhs = -f.inner(&rg).unwrap();
        let scale = lhs.abs().max(1e-3 * rf.l2_norm() * g.l2_norm());
        prop_assert!((lhs - rhs).abs() < 1e-2 * scale, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn riesz_apply_is_linear(a in -3.0f64..3.0, sf in 0u64..100, sg in 100u64..200) {
        let spec = make_grid(2, 32, 8.0).unwrap();
        let p = SolidHarmonic::parse("x1 x2", Some(2)).unwrap();
        let f = band_limited(&spec, sf, 1.0);
        let g = band_limited(&spec, sg, 1.0);
        let combo = f.scaled(a).add(&g).unwrap();
        let lhs = riesz_apply(&p, &combo).unwrap();
        let rhs = riesz_apply(&p, &f).unwrap().scaled(a).add(&riesz_apply(&p, &g).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() < 1e-12 * (1.0 + rhs.max_abs()));
    }
}
