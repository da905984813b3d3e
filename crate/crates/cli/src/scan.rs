use std::fmt::Write;

use serde_json::json;

use nilpotent_atlas::field::{quadratic_from_params, QuadraticParams};
use nilpotent_atlas::integrate::IntegratorConfig;
use nilpotent_atlas::maps::{return_derivative_via_divergence, return_map, MapConfig};
use nilpotent_atlas::verify::{
    cycle_scan, invariant_parabola, parabola_section, pprime_closed_form, scan_to_csv, ScanConfig,
};

use crate::config::{Format, RunConfig};
use crate::error::{invalid, CliResult, Failure};
use crate::grid::parse_b_delta;
use crate::output::{csv_report, json_report, Artifact};

fn map_config(cfg: &RunConfig) -> CliResult<MapConfig> {
    Ok(MapConfig::new(1e3, IntegratorConfig::with_tol(cfg.tol)?))
}

/// Cycle scan over a `(B, δ)` grid on the invariant-parabola family.
pub fn run_scan(cfg: &RunConfig) -> CliResult<Vec<Artifact>> {
    cfg.require_format(&[Format::Csv, Format::Json])?;
    let (bs, ds) = parse_b_delta(&cfg.grid)?;
    let scfg = ScanConfig {
        map: map_config(cfg)?,
        ..ScanConfig::default()
    };
    let cells = cycle_scan(&bs, &ds, &scfg);
    let body = json!({ "scan": scfg, "cells": cells });
    Ok(vec![
        Artifact::new("scan", Format::Csv, csv_report(cfg, &scan_to_csv(&cells))),
        Artifact::new("scan", Format::Json, json_report(cfg, body)),
    ])
}

/// Return map of the quadratic system on the section from the parabola vertex
/// toward the origin, with the derivative from the divergence integral.
pub fn run_returnmap(cfg: &RunConfig) -> CliResult<Vec<Artifact>> {
    cfg.require_format(&[Format::Csv, Format::Json])?;
    if cfg.n < 2 {
        return invalid("returnmap needs n >= 2");
    }
    let q = QuadraticParams::new(cfg.delta_rat(), cfg.gamma_rat(), cfg.b_rat());
    let (parabola, gamma_on) = invariant_parabola(&q.b_cap, &q.delta)?;
    let (section, len) = parabola_section(&q, &parabola)?;
    let scfg = ScanConfig::default();
    let hi = scfg.annulus.1.min(0.9 * len);
    let lo = scfg.annulus.0.min(hi);
    let n = cfg.n;
    let inputs: Vec<f64> = (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect();
    let f = quadratic_from_params(&q);
    let mcfg = map_config(cfg)?;
    let batch = return_map(&f, &section, &inputs, &mcfg);
    let derivs: Vec<Option<(f64, f64)>> = inputs
        .iter()
        .map(|&u| {
            return_derivative_via_divergence(&f, &section, u, &mcfg)
                .ok()
                .map(|r| (r.derivative, r.relative_disagreement()))
        })
        .collect();

    let mut csv = String::from("input,output,flight_time,derivative,derivative_fd_relerr,status\n");
    for (o, d) in batch.outcomes.iter().zip(&derivs) {
        let (dv, de) = d
            .map(|(a, b)| (format!("{a:.17e}"), format!("{b:.17e}")))
            .unwrap_or_default();
        match &o.sample {
            Ok(s) => {
                let _ = writeln!(
                    csv,
                    "{:.17e},{:.17e},{:.17e},{dv},{de},ok",
                    o.input, s.output, s.flight_time
                );
            }
            Err(e) => {
                let _ = writeln!(
                    csv,
                    "{:.17e},,,{dv},{de},\"{}\"",
                    o.input,
                    e.to_string().replace('"', "'")
                );
            }
        }
    }
    let on_parabola = gamma_on == q.gamma;
    let pprime = if on_parabola {
        pprime_closed_form(q.b_f64(), q.delta_f64()).ok()
    } else {
        None
    };
    let mut report = batch.to_json();
    for (s, d) in report["samples"]
        .as_array_mut()
        .expect("samples array")
        .iter_mut()
        .zip(&derivs)
    {
        if let Some((dv, de)) = d {
            s["derivative"] = json!(dv);
            s["derivative_fd_relerr"] = json!(de);
        }
    }
    let body = json!({
        "section": { "anchor": parabola.vertex(), "length": len, "orientation": section.orientation },
        "parabola": parabola.to_json(),
        "parabola_invariant": on_parabola,
        "pprime_at_zero": pprime,
        "samples": report["samples"],
        "fixed_point_brackets": batch.fixed_point_brackets(),
        "monotone": batch.is_monotone(),
    });
    let artifacts = vec![
        Artifact::new("returnmap", Format::Csv, csv_report(cfg, &csv)),
        Artifact::new("returnmap", Format::Json, json_report(cfg, body)),
    ];
    if let Some(e) = batch.first_error().filter(|_| batch.samples().next().is_none()) {
        crate::output::emit(cfg, &artifacts)?;
        return Err(Failure::Numeric(format!("no return on any input: {e}")));
    }
    Ok(artifacts)
}
