//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nilpotent_atlas::blowup::{
    blown_up_field_3d, compensator, critical_points, directional_subsystem, first_integral_pm, hamiltonian,
    hamiltonian_identity_terms, integrating_factor_terms, rescaled_field, ChartSign, Poly5, RescalingParams,
};
use nilpotent_atlas::field::{quadratic_from_params, QuadraticParams, VectorField};
use nilpotent_atlas::integrate::{integrate_until, Direction, IntegratorConfig, Section};
use nilpotent_atlas::maps::{
    displacement_map, dulac_exponent_fit, eps_log_slope, log_ladder, relative_config, return_derivative_via_divergence,
    return_map, saddle_node_central_eps, saddle_node_eps_closed_form, stable_center_flatness, MapConfig,
};
use nilpotent_atlas::poly::{rat, rat_to_f64};
use nilpotent_atlas::verify::{
    invariant_parabola, mu1_slice_sweep, parabola_invariance_residual, pprime_closed_form, pprime_numeric,
    ClassifyConfig,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn run(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let t0 = Instant::now();
    let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        verdict(false, format!("panicked: {msg}"))
    });
    let dt = t0.elapsed();
    let in_time = dt <= limit;
    let pass = v.pass && in_time;
    let timing = if in_time {
        format!("{:.2} s", dt.as_secs_f64())
    } else {
        format!("{:.2} s exceeds {:.0} s", dt.as_secs_f64(), limit.as_secs_f64())
    };
    println!(
        "{} C{id:<2} {name}: {} [{timing}]",
        if pass { "PASS" } else { "FAIL" },
        v.detail
    );
    pass
}

fn c1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut zero, mut perturbed_nonzero) = (0, 0);
    for _ in 0..100 {
        let den = rng.gen_range(2..1000);
        let b = rat(1, 1) + rat(rng.gen_range(1..den), den);
        let d = rat(rng.gen_range(-(den / 4)..=den / 4), den);
        let (p, g) = invariant_parabola(&b, &d).expect("B in (1, 2)");
        if parabola_invariance_residual(&QuadraticParams::new(d.clone(), g.clone(), b.clone()), &p).is_zero() {
            zero += 1;
        }
        let q = QuadraticParams::new(d, g + rat(1, 100), b);
        if !parabola_invariance_residual(&q, &p).is_zero() {
            perturbed_nonzero += 1;
        }
    }
    verdict(
        zero == 100 && perturbed_nonzero == 100,
        format!("{zero}/100 exact-zero residuals, {perturbed_nonzero}/100 nonzero after perturbing gamma"),
    )
}

/// The formula exactly as stated for this criterion.
fn stated_pprime(b: f64, d: f64) -> f64 {
    (4.0 * std::f64::consts::PI * d * b.sqrt() * (1.0 - b) / (1.0 - b * d * d).sqrt()).exp()
}

fn c2() -> Verdict {
    let mut worst_stated = 0.0f64;
    let mut worst_closed = 0.0f64;
    for b in [1.2, 1.5, 1.8] {
        for d in [0.05, 0.1, 0.2] {
            let n = pprime_numeric(b, d, 1e4).expect("valid grid");
            let s = stated_pprime(b, d);
            let c = pprime_closed_form(b, d).expect("valid grid");
            worst_stated = worst_stated.max(((n - s) / s).abs());
            worst_closed = worst_closed.max(((n - c) / c).abs());
        }
    }
    let zero_row = [1.2, 1.5, 1.8]
        .iter()
        .all(|&b| pprime_numeric(b, 0.0, 1e4) == Ok(1.0) && stated_pprime(b, 0.0) == 1.0);
    verdict(
        worst_stated < 1e-6 && zero_row,
        format!(
            "max relerr vs stated exp(4πδ√B(1−B)/√(1−Bδ²)) = {worst_stated:.3e}; \
             vs exp(4πδ√B(B−1)/√(1−Bδ²)) = {worst_closed:.3e}; δ=0 row exactly 1: {zero_row}"
        ),
    )
}

fn c3() -> Verdict {
    let p_mu = [0.3, -0.4, 0.5];
    let mut worst = 0.0f64;
    for a in [-0.3, -0.5, -0.7, -1.0] {
        let p = RescalingParams::new(a, p_mu[0], p_mu[1], p_mu[2]);
        for cp in critical_points(a).expect("a < 0") {
            let f = blown_up_field_3d(&p, cp.chart);
            let j = f.jacobian(cp.chart_state());
            let m = Matrix3::from_fn(|r, c| j[r][c]);
            let mut got: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.re).collect();
            let mut want = cp.eigenvalues.to_vec();
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            for (g, w) in got.iter().zip(&want) {
                worst = worst.max((g - w).abs());
            }
        }
    }
    verdict(
        worst < 1e-8,
        format!("4 points × 4 values of a, max eigenvalue error {worst:.3e}"),
    )
}

fn c4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cfg = IntegratorConfig::with_tol(1e-10).expect("tol");
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let m2 = rng.gen_range(0.5..1.5);
        let p = RescalingParams::new(-0.5, 0.0, m2, 0.0);
        let f = rescaled_field(&p);
        let r = rng.gen_range(0.05..0.4) * m2;
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let x0 = [r * th.cos(), -m2 + r * th.sin()];
        let h0 = hamiltonian(x0[0], x0[1], 0.0, m2);
        let (orbit, _) = integrate_until(&f, x0, Direction::Forward, 50.0, &cfg, |_| false).expect("bounded orbit");
        for s in &orbit.states {
            worst = worst.max((hamiltonian(s[0], s[1], 0.0, m2) - h0).abs());
        }
    }
    let (dh, rhs, div) = hamiltonian_identity_terms();
    let identity = dh == rhs;
    let divergence = div == Poly5::var(4);
    verdict(
        worst < 1e-8 && identity && divergence,
        format!(
            "max H drift {worst:.3e} over 10 orbits to t=50; dH/dt identity exact: {identity}; div ≡ μ̄3: {divergence}"
        ),
    )
}

fn c5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = IntegratorConfig::with_tol(1e-12).expect("tol");
    let mut worst = 0.0f64;
    for (s, sign) in [(1i8, ChartSign::Plus), (-1, ChartSign::Minus)] {
        for _ in 0..10 {
            let (m1, m2) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let p = RescalingParams::new(-0.5, m1, m2, 0.0);
            let f = directional_subsystem(&p, s).expect("chart sign");
            let x0 = [rng.gen_range(0.5..1.5), rng.gen_range(0.2..1.5)];
            let h = |x: &[f64; 2]| first_integral_pm(x[1] - 1.0, x[0], m1, m2, sign).expect("rho > 0");
            let h0 = h(&x0);
            let (orbit, _) = integrate_until(&f, x0, Direction::Forward, 5.0, &cfg, |x| {
                !(0.3..=3.0).contains(&x[0]) || x[1].abs() > 10.0
            })
            .expect("integration");
            for st in &orbit.states {
                worst = worst.max((h(st) - h0).abs());
            }
        }
    }
    let exact = [1i8, -1].iter().all(|&s| {
        let (dh, factor) = integrating_factor_terms(s);
        dh.is_zero() && factor.is_zero()
    });
    verdict(
        worst < 1e-8 && exact,
        format!("max H̄± drift {worst:.3e} over 10 orbits per chart; ρ⁻⁵ identities exact: {exact}"),
    )
}

fn c6() -> Verdict {
    let at_one = [0.3, -0.7, 1e-12, 2.0].iter().all(|&a| compensator(1.0, a) == Ok(0.0));
    let mut log_err = 0.0f64;
    for k in 0..=200 {
        let x = 10f64.powf(-2.0 + 2.0 * k as f64 / 200.0);
        log_err = log_err.max((compensator(x, 1e-12).unwrap() + x.ln()).abs());
    }
    let mut deriv_err = 0.0f64;
    for &a in &[0.3, -0.2, 1e-3] {
        for &x in &[0.05, 0.2, 0.7, 1.5] {
            let h = 1e-6 * x;
            let d = (compensator(x + h, a).unwrap() - compensator(x - h, a).unwrap()) / (2.0 * h);
            deriv_err = deriv_err.max((x * d + x.powf(-a)).abs());
        }
    }
    verdict(
        at_one && log_err < 1e-9 && deriv_err < 1e-6,
        format!(
            "ω(1,α)=0: {at_one}; max |ω(x,1e−12)+ln x| = {log_err:.3e}; max derivative identity error {deriv_err:.3e}"
        ),
    )
}

fn c7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let entry = Section::segment("y=1", [0.0, 1.0], [1.0, 0.0], 2.0).unwrap();
    let exit = Section::segment("x=1", [1.0, 0.0], [0.0, 1.0], 2.0).unwrap();
    let cfg = relative_config(1e-12, 1e3);
    let ladder = log_ladder(-2.0, -5.0, 0.5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let l1 = rng.gen_range(0.2..3.0);
        let l2 = rng.gen_range(0.2..3.0);
        let f = move |p: &[f64; 2]| [l1 * p[0], -l2 * p[1]];
        let d = dulac_exponent_fit(&f, &entry, &exit, &ladder, &cfg).expect("linear saddle transition");
        worst = worst.max((d.fit.exponent - l2 / l1).abs());
    }
    verdict(
        worst < 1e-4,
        format!("20 linear saddles, max |τ̂ − λ2/λ1| = {worst:.3e}"),
    )
}

fn c8() -> Verdict {
    let cfg = relative_config(1e-12, 1e5);
    let data = saddle_node_central_eps(1.0, 0.0, &[1e-2, 1e-3], 1.0, &cfg).expect("central transition");
    let mut eps_err = 0.0f64;
    let mut lin = 0.0f64;
    for d in &data {
        let want = saddle_node_eps_closed_form(1.0, d.eta, 1.0);
        eps_err = eps_err.max(((d.eps - want) / want).abs());
        lin = lin.max(d.linearity_defect);
    }
    let ladder = saddle_node_central_eps(1.0, 0.0, &[1e-4, 7e-5, 5e-5], 1.0, &cfg).expect("small eta");
    let slope = eps_log_slope(&ladder).expect("fit");
    let pi = std::f64::consts::PI;
    let slope_err = ((slope + pi) / pi).abs();
    verdict(
        eps_err < 1e-6 && lin < 1e-10 && slope_err < 0.01,
        format!(
            "max relerr of ε {eps_err:.3e}; linearity defect {lin:.3e}; slope {slope:.5} vs −π (rel {slope_err:.3e})"
        ),
    )
}

fn c9() -> Verdict {
    let cfg = relative_config(1e-12, 1e6);
    let (lambda, y0, x0) = (0.5, 1.0, 1.0);
    let xs = [1.0, 1e-1, 1e-2, 1e-3];
    let r = stable_center_flatness(lambda, 0.0, y0, x0, &xs, &cfg).expect("flatness");
    let mut worst = 0.0f64;
    let mut missing = 0;
    for s in r.samples.iter().filter(|s| s.input <= 1e-2) {
        let want = y0 * (-lambda * (1.0 / s.input - 1.0 / x0)).exp();
        match s.output {
            Some(y) => worst = worst.max(((y - want) / want).abs()),
            None => missing += 1,
        }
    }
    verdict(
        worst < 1e-6 && missing == 0 && r.strictly_increasing,
        format!(
            "λ=0.5: max relerr {worst:.3e} at x∈{{1e−2,1e−3}}; local slopes {:?} strictly increasing: {}",
            r.local_slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>(),
            r.strictly_increasing
        ),
    )
}

/// Ray from `o` through `toward`, with its length to `toward`.
fn ray(id: &str, o: [f64; 2], toward: [f64; 2]) -> (Section<2>, f64) {
    let d = [toward[0] - o[0], toward[1] - o[1]];
    let l = d[0].hypot(d[1]);
    (Section::segment(id, o, d, 1e3).unwrap().with_orientation(0), l)
}

fn window(l: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| l * (0.05 + 0.85 * k as f64 / (n - 1) as f64)).collect()
}

const MID_ANGLE: f64 = 2.0;

fn max_displacement<V: VectorField<2>>(f: &V, o: [f64; 2], toward: [f64; 2], cfg: &MapConfig) -> Result<f64, String> {
    let (s, l) = ray("window", o, toward);
    // a mid section off the symmetry axis, so the two half-orbits are computed differently
    let d = [toward[0] - o[0], toward[1] - o[1]];
    let (c, sn) = (MID_ANGLE.cos(), MID_ANGLE.sin());
    let (mid, _) = ray("mid", o, [o[0] + c * d[0] - sn * d[1], o[1] + sn * d[0] + c * d[1]]);
    // count only crossings of the half-line, which all share one sign of the normal velocity
    let v = f.eval(&mid.point(0.5 * l));
    let vn = mid.normal[0] * v[0] + mid.normal[1] * v[1];
    let mid = mid.with_orientation(if vn > 0.0 { 1 } else { -1 });
    let mut worst = 0.0f64;
    for out in displacement_map(f, &s, &s, &mid, &window(l, 12), cfg) {
        let d = out.sample.map_err(|e| e.to_string())?;
        worst = worst.max(d.displacement.abs());
    }
    Ok(worst)
}

fn c10() -> Verdict {
    let cfg = MapConfig::new(1e3, IntegratorConfig::with_tol(1e-12).unwrap());
    let mut notes = Vec::new();
    let mut ok = true;
    for b in [rat(6, 5), rat(3, 2), rat(9, 5)] {
        let zero = rat(0, 1);
        let (p, _) = invariant_parabola(&b, &zero).unwrap();
        let f = quadratic_from_params(&QuadraticParams::new(zero.clone(), zero, b.clone()));
        match max_displacement(&f, [0.0, 0.0], p.vertex(), &cfg) {
            Ok(d) => {
                ok &= d < 1e-7;
                notes.push(format!("B={}: {d:.2e}", rat_to_f64(&b)));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("B={}: {e}", rat_to_f64(&b)));
            }
        }
    }
    let ham = rescaled_field(&RescalingParams::new(-0.5, 0.0, 1.0, 0.0));
    match max_displacement(&ham, [0.0, -1.0], [0.0, -2.0], &cfg) {
        Ok(d) => {
            ok &= d < 1e-7;
            notes.push(format!("rescaled H: {d:.2e}"));
        }
        Err(e) => {
            ok = false;
            notes.push(format!("rescaled H: {e}"));
        }
    }

    let (b, d) = (rat(3, 2), rat(1, 10));
    let (p, g) = invariant_parabola(&b, &d).unwrap();
    let f = quadratic_from_params(&QuadraticParams::new(d, g, b));
    let (s, l) = ray("window", [0.0, 0.0], p.vertex());
    let s = s.with_orientation(1);
    let inputs = window(l, 12);
    let batch = return_map(&f, &s, &inputs, &cfg);
    let contracting = batch.all_ok() && batch.samples().all(|x| x.output < x.input);
    let mut worst_rel = 0.0f64;
    let mut derivs = Vec::new();
    for &u in &inputs {
        match return_derivative_via_divergence(&f, &s, u, &cfg) {
            Ok(r) => {
                worst_rel = worst_rel.max(r.relative_disagreement());
                derivs.push((u / l, r.derivative));
            }
            Err(_) => worst_rel = f64::INFINITY,
        }
    }
    let max_deriv = derivs.iter().map(|d| d.1).fold(0.0, f64::max);
    let first_expanding = derivs.iter().find(|d| d.1 >= 1.0).map(|d| d.0);
    let uniform = contracting && max_deriv < 1.0;
    ok &= uniform && worst_rel < 1e-4;
    verdict(
        ok,
        format!(
            "max |displacement| {}; δ=0.1, B=3/2 on u∈[0.05,0.9]L: P(u)<u everywhere: {contracting}, \
             max P' {max_deriv:.4}{}; divergence vs finite-difference relerr {worst_rel:.3e}",
            notes.join(", "),
            first_expanding
                .map(|x| format!(" (P'≥1 from u/L={x:.3})"))
                .unwrap_or_default()
        ),
    )
}

fn c11() -> Verdict {
    let samples = mu1_slice_sweep(-0.5, 50, &ClassifyConfig::default());
    let mut counts: std::collections::BTreeMap<String, usize> = Default::default();
    let mut violations = 0;
    for s in &samples {
        let key = match (&s.signature, &s.error) {
            (Some(sig), _) => {
                if sig.matches_only_below_line() {
                    violations += 1;
                }
                sig.label.clone()
            }
            (None, Some(e)) => format!("error({})", e.split(':').next().unwrap_or("")),
            _ => "none".into(),
        };
        *counts.entry(key).or_default() += 1;
    }
    verdict(
        violations == 0 && samples.len() == 50,
        format!("50 samples of μ̄1=0: {counts:?}; signatures matching only Sxhh9/Sxhh10: {violations}"),
    )
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        run(1, "invariant parabola identity", secs(1), c1),
        run(2, "P'(0) closed form vs quadrature", secs(10), c2),
        run(3, "blow-up eigenvalue table", secs(1), c3),
        run(4, "Hamiltonian structure of the rescaling", secs(5), c4),
        run(5, "first integrals on the directional charts", secs(5), c5),
        run(6, "compensator", secs(1), c6),
        run(7, "hyperbolic Dulac exponent", secs(30), c7),
        run(8, "saddle-node central transition", secs(10), c8),
        run(9, "stable-center flatness", secs(10), c9),
        run(10, "integrable-case identity return", secs(20), c10),
        run(11, "μ̄1 = 0 sweep constraint", secs(60), c11),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
