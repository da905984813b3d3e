use nilpotent_atlas::integrate::{Direction, IntegratorConfig, Section};
use nilpotent_atlas::maps::{
    default_dulac_ladder, dulac_exponent_fit, relative_config, return_derivative_via_divergence, transition_map,
    MapConfig, SaddleNodeModel,
};
use proptest::prelude::*;

fn ray(id: &str, angle: f64) -> Section<2> {
    Section::segment(id, [0.0, 0.0], [angle.cos(), angle.sin()], 10.0)
        .unwrap()
        .with_orientation(1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn divergence_derivative_matches_finite_differences(
        eps in -0.3f64..0.3, kappa in -0.1f64..0.1, omega in 0.5f64..2.0, u in 0.3f64..0.9,
    ) {
        let f = move |p: &[f64; 2]| {
            let g = 1.0 - p[0] * p[0] - p[1] * p[1];
            [-omega * p[1] + eps * p[0] * g + kappa * p[0] * p[1], omega * p[0] + eps * p[1] * g]
        };
        let cfg = MapConfig::new(100.0, IntegratorConfig::with_tol(1e-12).unwrap());
        let d = return_derivative_via_divergence(&f, &ray("s", 0.0), u, &cfg).unwrap();
        prop_assert!(d.relative_disagreement() < 1e-4, "{:?}", d);
    }

    #[test]
    fn linear_saddle_exponent(l1 in 0.5f64..3.0, l2 in 0.5f64..3.0) {
        let entry = Section::segment("y=1", [0.0, 1.0], [1.0, 0.0], 2.0).unwrap();
        let exit = Section::segment("x=1", [1.0, 0.0], [0.0, 1.0], 2.0).unwrap();
        let f = move |p: &[f64; 2]| [l1 * p[0], -l2 * p[1]];
        let d = dulac_exponent_fit(&f, &entry, &exit, &default_dulac_ladder(), &relative_config(1e-12, 1e3)).unwrap();
        prop_assert!((d.fit.exponent - l2 / l1).abs() < 1e-4);
    }

    #[test]
    fn saddle_node_central_transition_is_linear(eta in 1e-3f64..1e-1, lambda in 0.5f64..2.0) {
        let model = SaddleNodeModel { lambda, c: 0.0, eta };
        let entry = Section::segment("x=-1", [-1.0, 0.0], [0.0, 1.0], 1.0).unwrap();
        let exit = Section::segment("x=1", [1.0, 0.0], [0.0, 1.0], 1.0).unwrap();
        let b = transition_map(&model, &entry, &exit, &[1e-3, 2e-3, 5e-3], Direction::Forward, &relative_config(1e-12, 1e4));
        let ratios: Vec<f64> = b.samples().map(|s| s.output / s.input).collect();
        prop_assert_eq!(ratios.len(), 3);
        for r in &ratios[1..] {
            prop_assert!((r / ratios[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn transitions_compose(eps in -0.3f64..0.3, a2 in 0.5f64..2.5, a3 in 3.0f64..5.5, u in 0.3f64..0.9) {
        let f = move |p: &[f64; 2]| {
            let g = 1.0 - p[0] * p[0] - p[1] * p[1];
            [-p[1] + eps * p[0] * g, p[0] + eps * p[1] * g + 0.1 * p[0] * p[0]]
        };
        let tol = 1e-11;
        let cfg = MapConfig::new(100.0, IntegratorConfig::with_tol(tol).unwrap());
        let (s1, s2, s3) = (ray("s1", 0.0), ray("s2", a2), ray("s3", a3));
        let direct = transition_map(&f, &s1, &s3, &[u], Direction::Forward, &cfg);
        let half = transition_map(&f, &s1, &s2, &[u], Direction::Forward, &cfg);
        let mid = half.samples().next().unwrap().output;
        let rest = transition_map(&f, &s2, &s3, &[mid], Direction::Forward, &cfg);
        let (d, r) = (direct.samples().next().unwrap().output, rest.samples().next().unwrap().output);
        prop_assert!((d - r).abs() < 10.0 * tol * d.abs().max(1.0), "{} vs {}", d, r);
    }
}
