use nilpotent_atlas::field::QuadraticParams;
use nilpotent_atlas::poly::rat;
use nilpotent_atlas::verify::{
    invariant_parabola, mu1_slice_sweep, parabola_invariance_residual, pprime_closed_form, ClassifyConfig,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parabola_is_invariant_exactly(bn in 1i64..1000, dn in -249i64..=249, den in 1i64..50) {
        let b = rat(1, 1) + rat(bn, 1000);
        let d = rat(dn, 1000 * den);
        let (p, g) = invariant_parabola(&b, &d).unwrap();
        prop_assert!(parabola_invariance_residual(&QuadraticParams::new(d, g, b), &p).is_zero());
    }

    #[test]
    fn perturbing_gamma_breaks_invariance(bn in 1i64..1000, dn in -249i64..=249, pn in -50i64..=50, pd in 1i64..1000) {
        prop_assume!(pn != 0);
        let b = rat(1, 1) + rat(bn, 1000);
        let d = rat(dn, 1000);
        let (p, g) = invariant_parabola(&b, &d).unwrap();
        let q = QuadraticParams::new(d, g + rat(pn, pd), b);
        prop_assert!(!parabola_invariance_residual(&q, &p).is_zero());
    }

    #[test]
    fn closed_form_is_odd_in_delta(b in 1.0f64..2.0, d in -0.5f64..0.5) {
        prop_assume!(1.0 - b * d * d > 0.0);
        let p = pprime_closed_form(b, d).unwrap();
        let m = pprime_closed_form(b, -d).unwrap();
        prop_assert!((p * m - 1.0).abs() < 1e-12);
    }
}

#[test]
fn sxhh_labels_survive_halving_the_tolerance() {
    let coarse = mu1_slice_sweep(-0.5, 50, &ClassifyConfig::with_tol(1e-9));
    let fine = mu1_slice_sweep(-0.5, 50, &ClassifyConfig::with_tol(5e-10));
    for (c, f) in coarse.iter().zip(&fine) {
        assert_eq!(c.theta, f.theta);
        let lc = c.signature.as_ref().map(|s| s.label.clone());
        let lf = f.signature.as_ref().map(|s| s.label.clone());
        assert_eq!(lc, lf, "θ = {}", c.theta);
    }
}
