use nilpotent_atlas::charts::{
    chart_at_infinity, classify_finite_singularities, exact_linear_kind, normal_form_params, BBox, SingularKind,
};
use nilpotent_atlas::field::{quadratic_from_params, PolynomialField, QuadraticParams};
use nilpotent_atlas::poly::rat;
use proptest::prelude::*;

fn brute_kind(a: i64, b: i64, c: i64, d: i64) -> SingularKind {
    let tr = a + d;
    let det = a * d - b * c;
    if det < 0 {
        SingularKind::Saddle
    } else if tr == 0 || tr * tr < 4 * det {
        SingularKind::FocusOrCenter
    } else {
        SingularKind::Node
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn normal_form_parameters_are_linear_in_b(n in 1i64..1000, den in 1i64..200, g in -20i64..20, dl in -20i64..20) {
        let b = rat(1, 1) + rat(n, den);
        let q = QuadraticParams::new(rat(dl, 7), rat(g, 9), b.clone());
        let nf = normal_form_params(&q).unwrap();
        prop_assert_eq!(nf.a, rat(1, 1) - &b);
        prop_assert_eq!(nf.b, rat(3, 1) - rat(2, 1) * &b);
    }

    #[test]
    fn infinity_is_invariant(dl in -20i64..20, g in -20i64..20, n in -50i64..50) {
        let f = quadratic_from_params(&QuadraticParams::new(rat(dl, 3), rat(g, 5), rat(n, 4)));
        let chart = chart_at_infinity(&f);
        prop_assert!(chart.field.py().div_by_var_power(1, 1).is_some());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn linear_classification_matches_sign_analysis(
        a in -6i64..=6, b in -6i64..=6, c in -6i64..=6, d in -6i64..=6,
    ) {
        prop_assume!(a * d - b * c != 0);
        let f = PolynomialField::linear(rat(a, 1), rat(b, 1), rat(c, 1), rat(d, 1));
        let pts = classify_finite_singularities(&f, &BBox::default()).unwrap();
        prop_assert_eq!(pts.len(), 1);
        prop_assert!(pts[0].point[0].abs() < 1e-12 && pts[0].point[1].abs() < 1e-12);
        let want = brute_kind(a, b, c, d);
        prop_assert_eq!(pts[0].kind, want);
        let exact = exact_linear_kind([[rat(a, 1), rat(b, 1)], [rat(c, 1), rat(d, 1)]]);
        prop_assert_eq!(exact, want);
    }
}
