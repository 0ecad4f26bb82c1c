mod common;

use common::*;
use measchrod::measure::{BvFunction, Side, SignedMeasure};
use proptest::prelude::*;

fn sorted_breaks() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1..0.8f64, 2..6).prop_map(|gaps| {
        let mut x = -1.5;
        let mut out = vec![x];
        for g in gaps {
            x += g;
            out.push(x);
        }
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_rule(f in measure_draw(), g in measure_draw(), phi in prop::collection::vec(-1.0..1.0f64, 1..6)) {
        let e = product_rule_error(&f, &g, &phi);
        prop_assert!(e < 1e-8, "relative error {e}");
    }

    #[test]
    fn integration_by_parts(f in measure_draw(), k in 0.1..4.0f64, s in -3.0..3.0f64, a in -2.0..0.0f64, b in 0.0..2.0f64) {
        let e = integration_by_parts_error(&f, k, s, a, b);
        prop_assert!(e < 1e-8, "relative error {e}");
    }

    #[test]
    fn chain_rule_for_exponential(
        (breaks, slopes) in sorted_breaks().prop_flat_map(|b| {
            let n = b.len() - 1;
            (Just(b), prop::collection::vec(-2.0..2.0f64, n))
        })
    ) {
        let e = chain_rule_error(&breaks, &slopes);
        prop_assert!(e < 1e-8, "relative error {e}");
    }

    #[test]
    fn gaussian_smoothing_keeps_variation(
        atoms in prop::collection::vec((-1.5..1.5f64, prop_oneof![-2.0..-0.05f64, 0.05..2.0f64]), 1..5),
        eta in 0.02..1.0f64,
    ) {
        let e = smoothing_mass_error(&atoms, eta);
        prop_assert!(e < 1e-8, "relative error {e}");
    }

    #[test]
    fn cdf_differences_are_interval_masses(f in measure_draw(), a in -2.0..1.0f64, len in 0.0..2.0f64) {
        let e = interval_mass_error(&f, a, a + len);
        prop_assert!(e < 1e-12, "error {e}");
    }

    #[test]
    fn bv_limits_bracket_jumps(f in measure_draw()) {
        let fb = BvFunction::cdf_of(f.measure());
        for &(x, w) in &f.atoms {
            let v = fb.eval(x);
            prop_assert!((v.right - v.left - w).abs() < 1e-12);
            prop_assert!((v.average - 0.5 * (v.left + v.right)).abs() < 1e-15);
        }
    }

    #[test]
    fn total_variation_dominates_every_interval(f in measure_draw(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let m = f.measure();
        let (a, b) = (a.min(b), a.max(b));
        prop_assert!(m.interval_mass(a, b).abs() <= m.total_variation() + 1e-12);
    }
}

#[test]
fn left_and_right_cdf_differ_by_the_atom() {
    let m = SignedMeasure::atoms_only(&[(0.25, -1.5), (0.5, 2.0)]).unwrap();
    assert_eq!(m.cdf(0.25, Side::Right) - m.cdf(0.25, Side::Left), -1.5);
    assert_eq!(m.cdf(0.4, Side::Right), m.cdf(0.4, Side::Left));
}
