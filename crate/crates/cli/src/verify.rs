//! Verification suites with per-check numbers.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use nilpotent_atlas::blowup::{
    blown_up_field_3d, compensator, critical_points, directional_subsystem, first_integral_pm, hamiltonian,
    hamiltonian_identity_terms, integrating_factor_terms, rescaled_field, ChartSign, Poly5, RescalingParams,
};
use nilpotent_atlas::field::QuadraticParams;
use nilpotent_atlas::integrate::{integrate_until, Direction, IntegratorConfig, Section};
use nilpotent_atlas::maps::{
    dulac_exponent_fit, eps_log_slope, log_ladder, relative_config, saddle_node_central_eps,
    saddle_node_eps_closed_form, stable_center_flatness,
};
use nilpotent_atlas::poly::rat;
use nilpotent_atlas::verify::{
    invariant_parabola, parabola_invariance_residual, pprime_closed_form, pprime_numeric, pprime_opposite_sign,
};

use crate::config::{Format, RunConfig, Suite};
use crate::error::{invalid, CliResult, Failure};
use crate::grid::parse_b_delta;
use crate::output::{json_report, Artifact};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub value: f64,
    /// Pass condition, as text.
    pub require: String,
    pub detail: String,
}

fn below(name: &'static str, value: f64, limit: f64, detail: impl Into<String>) -> Check {
    Check {
        name,
        pass: value < limit,
        value,
        require: format!("< {limit:e}"),
        detail: detail.into(),
    }
}

fn count(name: &'static str, got: usize, want: usize, detail: impl Into<String>) -> Check {
    Check {
        name,
        pass: got == want,
        value: got as f64,
        require: format!("= {want}"),
        detail: detail.into(),
    }
}

fn holds(name: &'static str, ok: bool, detail: impl Into<String>) -> Check {
    Check {
        name,
        pass: ok,
        value: if ok { 1.0 } else { 0.0 },
        require: "true".into(),
        detail: detail.into(),
    }
}

type SuiteOut = CliResult<(Vec<Check>, Value)>;

fn parabola(cfg: &RunConfig) -> SuiteOut {
    if cfg.n == 0 {
        return invalid("parabola suite needs n >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut zero, mut perturbed) = (0, 0);
    let mut cases = Vec::new();
    for _ in 0..cfg.n {
        let den = rng.gen_range(2..1000);
        let b = rat(1, 1) + rat(rng.gen_range(1..den), den);
        let d = rat(rng.gen_range(-(den / 4)..=den / 4), den);
        let (p, g) = invariant_parabola(&b, &d)?;
        let q = QuadraticParams::new(d.clone(), g.clone(), b.clone());
        let ok = parabola_invariance_residual(&q, &p).is_zero();
        zero += usize::from(ok);
        let q2 = QuadraticParams::new(d.clone(), &g + rat(1, 100), b.clone());
        perturbed += usize::from(!parabola_invariance_residual(&q2, &p).is_zero());
        cases.push(json!({ "B": b.to_string(), "delta": d.to_string(), "gamma": g.to_string(), "zero": ok }));
    }
    let n = cfg.n;
    Ok((
        vec![
            count(
                "exact_zero_residuals",
                zero,
                n,
                format!("{zero}/{n} exact-zero residuals"),
            ),
            count(
                "perturbed_nonzero",
                perturbed,
                n,
                format!("{perturbed}/{n} nonzero after gamma += 1/100"),
            ),
        ],
        json!({ "cases": cases }),
    ))
}

fn pprime(cfg: &RunConfig) -> SuiteOut {
    let (bs, ds) = parse_b_delta(&cfg.grid)?;
    let mut worst = 0.0f64;
    let mut worst_opposite = 0.0f64;
    let mut cells = Vec::new();
    for &b in &bs {
        for &d in &ds {
            let closed = pprime_closed_form(b, d)?;
            let numeric = pprime_numeric(b, d, 1e4)?;
            let opposite = pprime_opposite_sign(b, d)?;
            let rel = ((numeric - closed) / closed).abs();
            worst = worst.max(rel);
            worst_opposite = worst_opposite.max(((numeric - opposite) / opposite).abs());
            cells.push(json!({ "B": b, "delta": d, "closed": closed, "numeric": numeric, "relerr": rel }));
        }
    }
    let unit = bs.iter().all(|&b| pprime_numeric(b, 0.0, 1e4) == Ok(1.0));
    Ok((
        vec![
            below(
                "max_relerr",
                worst,
                1e-6,
                format!("max relerr numeric vs closed form over {} cells", cells.len()),
            ),
            holds("delta_zero_is_one", unit, "numeric P'(0) = 1 exactly at delta = 0"),
        ],
        json!({ "cells": cells, "max_relerr_opposite_sign": worst_opposite }),
    ))
}

fn table1(cfg: &RunConfig) -> SuiteOut {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mu = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ];
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for a in [-0.3, -0.5, -0.7, -1.0] {
        let p = RescalingParams::new(a, mu[0], mu[1], mu[2]);
        for cp in critical_points(a)? {
            let j = blown_up_field_3d(&p, cp.chart).jacobian(cp.chart_state());
            let m = Matrix3::from_fn(|r, c| j[r][c]);
            let mut got: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.re).collect();
            let mut want = cp.eigenvalues.to_vec();
            got.sort_by(f64::total_cmp);
            want.sort_by(f64::total_cmp);
            let err = got.iter().zip(&want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
            worst = worst.max(err);
            rows.push(json!({ "a": a, "point": cp.label, "expected": want, "computed": got, "error": err }));
        }
    }
    Ok((
        vec![below(
            "max_eigenvalue_error",
            worst,
            1e-8,
            format!("{} points x 4 values of a", rows.len() / 4),
        )],
        json!({ "mu_bar": mu, "rows": rows }),
    ))
}

fn hamiltonian_suite(cfg: &RunConfig) -> SuiteOut {
    if cfg.n == 0 {
        return invalid("hamiltonian suite needs n >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let icfg = IntegratorConfig::with_tol(cfg.tol)?;
    let mut drift = 0.0f64;
    for _ in 0..cfg.n {
        let m2 = rng.gen_range(0.5..1.5);
        let f = rescaled_field(&RescalingParams::new(-0.5, 0.0, m2, 0.0));
        let r = rng.gen_range(0.05..0.4) * m2;
        let th = rng.gen_range(0.0..TAU);
        let x0 = [r * th.cos(), -m2 + r * th.sin()];
        let h0 = hamiltonian(x0[0], x0[1], 0.0, m2);
        let (orbit, _) = integrate_until(&f, x0, Direction::Forward, 50.0, &icfg, |_| false)?;
        for s in &orbit.states {
            drift = drift.max((hamiltonian(s[0], s[1], 0.0, m2) - h0).abs());
        }
    }
    let (dh, rhs, div) = hamiltonian_identity_terms();

    let icfg12 = IntegratorConfig::with_tol(1e-12)?;
    let mut drift_pm = 0.0f64;
    for (s, sign) in [(1i8, ChartSign::Plus), (-1, ChartSign::Minus)] {
        for _ in 0..cfg.n {
            let (m1, m2) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            let f = directional_subsystem(&RescalingParams::new(-0.5, m1, m2, 0.0), s)?;
            let x0 = [rng.gen_range(0.5..1.5), rng.gen_range(0.2..1.5)];
            let h = |x: &[f64; 2]| first_integral_pm(x[1] - 1.0, x[0], m1, m2, sign);
            let h0 = h(&x0)?;
            let (orbit, _) = integrate_until(&f, x0, Direction::Forward, 5.0, &icfg12, |x| {
                !(0.3..=3.0).contains(&x[0]) || x[1].abs() > 10.0
            })?;
            for st in &orbit.states {
                drift_pm = drift_pm.max((h(st)? - h0).abs());
            }
        }
    }
    let factor_exact = [1i8, -1].iter().all(|&s| {
        let (d, f) = integrating_factor_terms(s);
        d.is_zero() && f.is_zero()
    });
    let n = cfg.n;
    Ok((
        vec![
            below(
                "h_drift",
                drift,
                1e-8,
                format!("max |H - H0| over {n} orbits to t = 50"),
            ),
            holds("dh_identity", dh == rhs, "dH/dt = mu3bar ybar dH/dybar exactly"),
            holds("divergence", div == Poly5::var(4), "divergence is mu3bar exactly"),
            below(
                "chart_integral_drift",
                drift_pm,
                1e-8,
                format!("max drift over {n} orbits per directional chart"),
            ),
            holds(
                "integrating_factor",
                factor_exact,
                "rho^-5 integrating-factor identities exact",
            ),
        ],
        json!({}),
    ))
}

fn compensator_suite(_: &RunConfig) -> SuiteOut {
    let at_one = [0.3, -0.7, 1e-12, 2.0].iter().all(|&a| compensator(1.0, a) == Ok(0.0));
    let mut log_err = 0.0f64;
    for k in 0..=200 {
        let x = 10f64.powf(-2.0 + 2.0 * k as f64 / 200.0);
        log_err = log_err.max((compensator(x, 1e-12)? + x.ln()).abs());
    }
    let mut deriv_err = 0.0f64;
    for &a in &[0.3, -0.2, 1e-3] {
        for &x in &[0.05, 0.2, 0.7, 1.5] {
            let h = 1e-6 * x;
            let d = (compensator(x + h, a)? - compensator(x - h, a)?) / (2.0 * h);
            deriv_err = deriv_err.max((x * d + x.powf(-a)).abs());
        }
    }
    Ok((
        vec![
            holds("vanishes_at_one", at_one, "omega(1, alpha) = 0"),
            below("log_limit", log_err, 1e-9, "max |omega(x, 1e-12) + ln x| on [1e-2, 1]"),
            below(
                "derivative_identity",
                deriv_err,
                1e-6,
                "max |x omega' + x^-alpha| by central differences",
            ),
        ],
        json!({}),
    ))
}

fn saddlenode(_: &RunConfig) -> SuiteOut {
    let cfg = relative_config(1e-12, 1e5);
    let data = saddle_node_central_eps(1.0, 0.0, &[1e-2, 1e-3], 1.0, &cfg)?;
    let mut eps_err = 0.0f64;
    let mut lin = 0.0f64;
    for d in &data {
        let want = saddle_node_eps_closed_form(1.0, d.eta, 1.0);
        eps_err = eps_err.max(((d.eps - want) / want).abs());
        lin = lin.max(d.linearity_defect);
    }
    let ladder = saddle_node_central_eps(1.0, 0.0, &[1e-4, 7e-5, 5e-5], 1.0, &cfg)?;
    let slope = eps_log_slope(&ladder)?;

    let fcfg = relative_config(1e-12, 1e6);
    let (lambda, y0, x0) = (0.5, 1.0, 1.0);
    let r = stable_center_flatness(lambda, 0.0, y0, x0, &[1.0, 1e-1, 1e-2, 1e-3], &fcfg)?;
    let mut flat = 0.0f64;
    for s in r.samples.iter().filter(|s| s.input <= 1e-2) {
        let want = y0 * (-lambda * (1.0 / s.input - 1.0 / x0)).exp();
        let y = s
            .output
            .ok_or_else(|| Failure::Numeric(format!("no exit value at x = {}", s.input)))?;
        flat = flat.max(((y - want) / want).abs());
    }
    Ok((
        vec![
            below("central_eps_relerr", eps_err, 1e-6, "eta in {1e-2, 1e-3}"),
            below(
                "central_linearity",
                lin,
                1e-10,
                "linearity defect of the central transition",
            ),
            below(
                "log_slope",
                ((slope + PI) / PI).abs(),
                0.01,
                format!("slope {slope:.6} vs -pi"),
            ),
            below("flatness_relerr", flat, 1e-6, "lambda = 1/2 at x in {1e-2, 1e-3}"),
            holds(
                "flatness_slopes_increasing",
                r.strictly_increasing,
                format!("{:?}", r.local_slopes),
            ),
        ],
        json!({ "eta_ladder_slope": slope }),
    ))
}

fn dulac(cfg: &RunConfig) -> SuiteOut {
    if cfg.n == 0 {
        return invalid("dulac suite needs n >= 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let entry = Section::segment("y=1", [0.0, 1.0], [1.0, 0.0], 2.0)?;
    let exit = Section::segment("x=1", [1.0, 0.0], [0.0, 1.0], 2.0)?;
    let mcfg = relative_config(1e-12, 1e3);
    let ladder = log_ladder(-2.0, -5.0, 0.5);
    let mut worst = 0.0f64;
    let mut fits = Vec::new();
    for _ in 0..cfg.n {
        let l1 = rng.gen_range(0.2..3.0);
        let l2 = rng.gen_range(0.2..3.0);
        let f = move |p: &[f64; 2]| [l1 * p[0], -l2 * p[1]];
        let d = dulac_exponent_fit(&f, &entry, &exit, &ladder, &mcfg)?;
        let err = (d.fit.exponent - l2 / l1).abs();
        worst = worst.max(err);
        fits.push(json!({ "lambda1": l1, "lambda2": l2, "exponent": d.fit.exponent, "error": err }));
    }
    Ok((
        vec![below(
            "exponent_error",
            worst,
            1e-4,
            format!("{} linear saddles", cfg.n),
        )],
        json!({ "fits": fits }),
    ))
}

pub fn run_suite(cfg: &RunConfig, suite: Suite) -> SuiteOut {
    match suite {
        Suite::Parabola => parabola(cfg),
        Suite::Pprime => pprime(cfg),
        Suite::Table1 => table1(cfg),
        Suite::Hamiltonian => hamiltonian_suite(cfg),
        Suite::Compensator => compensator_suite(cfg),
        Suite::Saddlenode => saddlenode(cfg),
        Suite::Dulac => dulac(cfg),
    }
}

/// Report artifact and overall verdict; the report is produced even when
/// checks fail.
pub fn run(cfg: &RunConfig) -> CliResult<(Vec<Artifact>, bool)> {
    cfg.require_format(&[Format::Json])?;
    let Some(suite) = cfg.suite else {
        return invalid("verify needs --suite");
    };
    let (checks, details) = run_suite(cfg, suite)?;
    let pass = checks.iter().all(|c| c.pass);
    let body = json!({ "suite": suite.name(), "pass": pass, "checks": checks, "details": details });
    let name = format!("verify-{}", suite.name());
    Ok((vec![Artifact::new(&name, Format::Json, json_report(cfg, body))], pass))
}
