//! Phase portraits of the rescaled family on the compactified disc.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::{json, Value};

use nilpotent_atlas::blowup::{
    critical_point_on_disc, critical_points, from_disc, hamiltonian, rescaled_field, to_disc, RescalingParams,
};
use nilpotent_atlas::charts::{classify_finite_singularities, BBox, SingularKind, SingularPoint};
use nilpotent_atlas::field::{PolynomialField, VectorField};
use nilpotent_atlas::integrate::{integrate_until, Direction, IntegratorConfig};
use nilpotent_atlas::parallel::par_map;
use nilpotent_atlas::verify::{classify_sxhh, mu1_slice_sweep, ClassifyConfig, SweepSample};
use nilpotent_atlas::AtlasError;

use crate::config::{Format, RunConfig};
use crate::error::{invalid, CliResult};
use crate::grid::parse_seed_grid;
use crate::output::{csv_report, json_report, Artifact};
use crate::svg::{Panel, Svg};

/// Time budget in the normalized clock.
const TMAX: f64 = 150.0;
const ESCAPE_X: f64 = 1e3;
const ESCAPE_Y: f64 = 1e6;
const STOP_RADIUS: f64 = 1e-5;
const SEPARATRIX_OFFSET: f64 = 1e-4;
const SEED_DISC_RADIUS: f64 = 0.95;
const CONTOUR_CELLS: usize = 300;
/// Minimal spacing, in disc units, between stored curve points.
const MIN_SPACING: f64 = 4e-3;

#[derive(Clone, Debug)]
pub struct Curve {
    pub kind: &'static str,
    pub seed: [f64; 2],
    /// Normalized time, negative along the backward half.
    pub times: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub stop: String,
}

struct Tracer<'a> {
    f: &'a PolynomialField,
    sing: Vec<[f64; 2]>,
    icfg: IntegratorConfig,
}

impl Tracer<'_> {
    fn half(&self, x0: [f64; 2], dir: Direction) -> (Vec<(f64, [f64; 2])>, String) {
        let f = self.f;
        let g = move |x: &[f64; 2]| {
            let v = f.eval(x);
            let s = (1.0 + x[0] * x[0] + x[1].abs()).sqrt();
            [v[0] / s, v[1] / s]
        };
        let escaped = |x: &[f64; 2]| x[0].abs() > ESCAPE_X || x[1].abs() > ESCAPE_Y;
        let near = |x: &[f64; 2]| self.sing.iter().any(|p| (x[0] - p[0]).hypot(x[1] - p[1]) < STOP_RADIUS);
        let sign = match dir {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        match integrate_until(&g, x0, dir, TMAX, &self.icfg, |x| escaped(x) || near(x)) {
            Ok((orbit, stopped)) => {
                let mut pts = vec![(0.0, x0)];
                for (k, seg) in orbit.segments.iter().enumerate() {
                    let t0 = orbit.times[k];
                    for th in [0.25, 0.5, 0.75] {
                        pts.push((sign * (t0 + th * seg.h), seg.eval_theta(th)));
                    }
                    pts.push((sign * orbit.times[k + 1], orbit.states[k + 1]));
                }
                let last = orbit.final_state();
                let reason = if !stopped {
                    "time limit"
                } else if escaped(&last) {
                    "boundary"
                } else {
                    "singular point"
                };
                (pts, reason.to_string())
            }
            Err(e) => (vec![(0.0, x0)], format!("error: {e}")),
        }
    }

    fn curve(&self, kind: &'static str, x0: [f64; 2], dirs: &[Direction]) -> Curve {
        let mut times = Vec::new();
        let mut points = Vec::new();
        let mut stops = Vec::new();
        if dirs.contains(&Direction::Backward) {
            let (pts, why) = self.half(x0, Direction::Backward);
            for (t, p) in pts.iter().rev() {
                times.push(*t);
                points.push(*p);
            }
            stops.push(format!("backward: {why}"));
        }
        if dirs.contains(&Direction::Forward) {
            let (pts, why) = self.half(x0, Direction::Forward);
            let skip = usize::from(!points.is_empty());
            for (t, p) in pts.iter().skip(skip) {
                times.push(*t);
                points.push(*p);
            }
            stops.push(format!("forward: {why}"));
        }
        let (times, points) = thin(&times, &points);
        Curve {
            kind,
            seed: x0,
            times,
            points,
            stop: stops.join("; "),
        }
    }
}

/// Drops points closer than [`MIN_SPACING`] on the disc to the last kept one;
/// the seed and both ends are kept.
fn thin(times: &[f64], points: &[[f64; 2]]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let mut t = Vec::new();
    let mut p = Vec::new();
    let mut last = [f64::INFINITY; 2];
    for (k, (ti, pi)) in times.iter().zip(points).enumerate() {
        let d = to_disc(pi[0], pi[1]);
        let end = k == 0 || k + 1 == points.len() || *ti == 0.0;
        if end || (d[0] - last[0]).hypot(d[1] - last[1]) >= MIN_SPACING {
            t.push(*ti);
            p.push(*pi);
            last = d;
        }
    }
    (t, p)
}

fn eigenvector(j: [[f64; 2]; 2], l: f64) -> [f64; 2] {
    let a = [j[0][1], l - j[0][0]];
    let b = [l - j[1][1], j[1][0]];
    let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Starting points and directions of the separatrices of saddles and the
/// hyperbolic sectors of saddle-nodes.
fn separatrix_starts(f: &PolynomialField, points: &[SingularPoint]) -> Vec<(&'static str, [f64; 2], Direction)> {
    let mut out = Vec::new();
    for s in points {
        let j = f.jacobian(s.point);
        let ls: Vec<f64> = s.eigenvalues.iter().map(|z| z.re).collect();
        let dirs: Vec<(f64, Direction, &'static str)> = match s.kind {
            SingularKind::Saddle => vec![
                (ls[0].max(ls[1]), Direction::Forward, "unstable"),
                (ls[0].min(ls[1]), Direction::Backward, "stable"),
            ],
            SingularKind::SaddleNode => {
                let l = if ls[0].abs() > ls[1].abs() { ls[0] } else { ls[1] };
                let dir = if l > 0.0 {
                    Direction::Forward
                } else {
                    Direction::Backward
                };
                vec![(l, dir, if l > 0.0 { "unstable" } else { "stable" })]
            }
            _ => continue,
        };
        for (l, dir, kind) in dirs {
            let v = eigenvector(j, l);
            for sgn in [1.0, -1.0] {
                let x0 = [
                    s.point[0] + sgn * SEPARATRIX_OFFSET * v[0],
                    s.point[1] + sgn * SEPARATRIX_OFFSET * v[1],
                ];
                out.push((kind, x0, dir));
            }
        }
    }
    out
}

fn kind_class(k: SingularKind) -> &'static str {
    match k {
        SingularKind::Saddle => "saddle",
        SingularKind::Node => "node",
        SingularKind::SaddleNode => "sn",
        _ => "focus",
    }
}

struct Portrait {
    params: RescalingParams,
    points: Vec<SingularPoint>,
    curves: Vec<Curve>,
}

fn compute(params: RescalingParams, bbox: f64, tol: f64, seeds: &[[f64; 2]]) -> CliResult<Portrait> {
    let f = rescaled_field(&params);
    let points = classify_finite_singularities(&f, &BBox::square(bbox))?;
    let tracer = Tracer {
        f: &f,
        sing: points.iter().map(|s| s.point).collect(),
        icfg: IntegratorConfig::with_tol(tol)?,
    };
    let mut jobs: Vec<(&'static str, [f64; 2], Vec<Direction>)> = separatrix_starts(&f, &points)
        .into_iter()
        .map(|(k, x, d)| (k, x, vec![d]))
        .collect();
    for s in seeds {
        if tracer.sing.iter().all(|p| (s[0] - p[0]).hypot(s[1] - p[1]) > 1e-3) {
            jobs.push(("orbit", *s, vec![Direction::Backward, Direction::Forward]));
        }
    }
    let curves = par_map(&jobs, |(k, x, d)| tracer.curve(k, *x, d));
    Ok(Portrait { params, points, curves })
}

fn seed_grid(cols: usize, rows: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for j in 0..rows {
        for i in 0..cols {
            let u = -1.0 + (2 * i + 1) as f64 / cols as f64;
            let w = -1.0 + (2 * j + 1) as f64 / rows as f64;
            if u.hypot(w) < SEED_DISC_RADIUS {
                if let Some(x) = from_disc(u, w) {
                    out.push(x);
                }
            }
        }
    }
    out
}

fn disc_path(c: &Curve) -> Vec<[f64; 2]> {
    c.points.iter().map(|p| to_disc(p[0], p[1])).collect()
}

fn draw(svg: &mut Svg, panel: &Panel, p: &Portrait, marker: f64) -> CliResult<()> {
    svg.disc(panel);
    for c in p.curves.iter().filter(|c| c.kind == "orbit") {
        svg.polyline(panel, &disc_path(c), "orbit");
    }
    for c in p.curves.iter().filter(|c| c.kind != "orbit") {
        svg.polyline(panel, &disc_path(c), "sep");
    }
    for s in &p.points {
        svg.marker(panel, to_disc(s.point[0], s.point[1]), kind_class(s.kind), marker);
    }
    for cp in critical_points(p.params.a)? {
        let q = critical_point_on_disc(&cp);
        svg.marker(panel, q, "bd", marker);
        if marker >= 3.0 {
            let (x, y) = panel.map([q[0] * 1.06, q[1] * 1.06]);
            let dx = if q[0] < 0.0 { -16.0 } else { 2.0 };
            svg.text(x + dx, y + 4.0, &cp.label.to_string());
        }
    }
    Ok(())
}

/// Contour segments of `h` at `level` over the disc, by marching squares.
pub fn contour(values: &[Vec<Option<f64>>], level: f64) -> Vec<([f64; 2], [f64; 2])> {
    let k = values.len() - 1;
    let at = |i: usize| -1.0 + 2.0 * i as f64 / k as f64;
    let mut segs = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let vals: Option<Vec<f64>> = corners.iter().map(|&(a, b)| values[a][b]).collect();
            let Some(v) = vals else { continue };
            let mut cross = Vec::new();
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                let (va, vb) = (v[a] - level, v[b] - level);
                if (va >= 0.0) != (vb >= 0.0) {
                    let s = va / (va - vb);
                    let (pa, pb) = (corners[a], corners[b]);
                    cross.push([
                        at(pa.0) + s * (at(pb.0) - at(pa.0)),
                        at(pa.1) + s * (at(pb.1) - at(pa.1)),
                    ]);
                }
            }
            for pair in cross.chunks_exact(2) {
                segs.push((pair[0], pair[1]));
            }
        }
    }
    segs
}

fn h_grid(p: &RescalingParams) -> Vec<Vec<Option<f64>>> {
    let k = CONTOUR_CELLS;
    (0..=k)
        .map(|i| {
            (0..=k)
                .map(|j| {
                    let u = -1.0 + 2.0 * i as f64 / k as f64;
                    let w = -1.0 + 2.0 * j as f64 / k as f64;
                    from_disc(u, w).map(|x| hamiltonian(x[0], x[1], p.mu1bar, p.mu2bar))
                })
                .collect()
        })
        .collect()
}

fn is_hamiltonian(p: &RescalingParams) -> bool {
    p.a == -0.5 && p.mu3bar == 0.0
}

/// Half-width of the box where H drift is measured; farther out the level
/// sets crowd toward the boundary and H is ill-conditioned.
const DRIFT_BOX: f64 = 10.0;

/// `max |H − H(seed)|` over the curve points inside the drift box.
fn h_drift(p: &RescalingParams, c: &Curve) -> f64 {
    let h0 = hamiltonian(c.seed[0], c.seed[1], p.mu1bar, p.mu2bar);
    c.points
        .iter()
        .filter(|x| x[0].abs() <= DRIFT_BOX && x[1].abs() <= DRIFT_BOX)
        .map(|x| (hamiltonian(x[0], x[1], p.mu1bar, p.mu2bar) - h0).abs())
        .fold(0.0, f64::max)
}

fn point_json(s: &SingularPoint) -> Value {
    json!({ "point": s.point, "disc": to_disc(s.point[0], s.point[1]), "kind": s.kind })
}

pub fn run(cfg: &RunConfig) -> CliResult<Vec<Artifact>> {
    let (cols, rows) = parse_seed_grid(&cfg.grid)?;
    let seeds = seed_grid(cols, rows);
    if seeds.is_empty() {
        return invalid(format!("grid {:?} places no seed inside the disc", cfg.grid));
    }
    let params = RescalingParams::new(cfg.a, cfg.mu1bar, cfg.mu2bar, cfg.mu3bar);
    let ham = is_hamiltonian(&params);
    if cfg.hcontours && !ham {
        return invalid("hcontours needs a = -1/2 and mu3bar = 0");
    }
    let boundary = critical_points(params.a)?;
    let portrait = compute(params.clone(), cfg.bbox, cfg.tol, &seeds)?;

    let (signature, signature_error) = match classify_sxhh(&params, &ClassifyConfig::default()) {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let mut svg = Svg::new(440.0, 460.0);
    let panel = Panel {
        cx: 220.0,
        cy: 220.0,
        r: 190.0,
    };
    if cfg.hcontours {
        let values = h_grid(&params);
        let mut levels: Vec<f64> = portrait
            .curves
            .iter()
            .filter(|c| c.kind == "orbit")
            .map(|c| hamiltonian(c.seed[0], c.seed[1], params.mu1bar, params.mu2bar))
            .collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        for l in levels {
            svg.segments(&panel, &contour(&values, l), "hc");
        }
    }
    draw(&mut svg, &panel, &portrait, 4.0)?;
    let label = signature
        .as_ref()
        .map(|s| s.label.clone())
        .unwrap_or_else(|| "unclassified".into());
    svg.text(
        20.0,
        448.0,
        &format!(
            "a={} mu=({}, {}, {})  {label}",
            params.a, params.mu1bar, params.mu2bar, params.mu3bar
        ),
    );
    let meta = serde_json::to_string(cfg).expect("config serializes");

    let mut csv = String::from("curve,kind,t,xbar,ybar,u,w\n");
    for (id, c) in portrait.curves.iter().enumerate() {
        for (t, p) in c.times.iter().zip(&c.points) {
            let d = to_disc(p[0], p[1]);
            let _ = writeln!(
                csv,
                "{id},{},{t:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                c.kind, p[0], p[1], d[0], d[1]
            );
        }
    }

    let curves: Vec<Value> = portrait
        .curves
        .iter()
        .enumerate()
        .map(|(id, c)| {
            let mut v = json!({
                "id": id,
                "kind": c.kind,
                "seed": c.seed,
                "points": c.points.len(),
                "t_range": [c.times.first(), c.times.last()],
                "stop": c.stop,
            });
            if ham {
                v["h_drift"] = json!(h_drift(&params, c));
            }
            v
        })
        .collect();
    let body = json!({
        "params": params,
        "field": rescaled_field(&params).to_json(),
        "hamiltonian": ham,
        "singular_points": portrait.points.iter().map(point_json).collect::<Vec<_>>(),
        "boundary_points": boundary.iter().map(|cp| json!({
            "label": cp.label,
            "disc": critical_point_on_disc(cp),
            "eigenvalues": cp.eigenvalues,
        })).collect::<Vec<_>>(),
        "signature": signature,
        "signature_error": signature_error,
        "max_h_drift": ham.then(|| portrait.curves.iter().filter(|c| c.kind == "orbit").map(|c| h_drift(&params, c)).fold(0.0, f64::max)),
        "curves": curves,
    });
    Ok(vec![
        Artifact::new("portrait", Format::Svg, svg.finish(&meta)),
        Artifact::new("portrait", Format::Csv, csv_report(cfg, &csv)),
        Artifact::new("portrait", Format::Json, json_report(cfg, body)),
    ])
}

const GALLERY_COLS: usize = 5;
const GALLERY_CELL: f64 = 160.0;

fn sample_label(s: &SweepSample) -> String {
    match (&s.signature, &s.error) {
        (Some(sig), _) => sig.label.clone(),
        (None, Some(e)) => format!("error: {}", e.split(':').next().unwrap_or("")),
        _ => "none".into(),
    }
}

/// Signatures along the slice `μ̄1 = 0` of the parameter sphere.
pub fn run_sweep(cfg: &RunConfig) -> CliResult<Vec<Artifact>> {
    if cfg.n == 0 {
        return invalid("sweep needs n >= 1");
    }
    if !(cfg.a < 0.0) {
        return Err(AtlasError::InvalidInput(format!("sweep needs a < 0, got {}", cfg.a)).into());
    }
    let samples = mu1_slice_sweep(cfg.a, cfg.n, &ClassifyConfig::default());
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for s in &samples {
        *counts.entry(sample_label(s)).or_default() += 1;
    }

    let mut csv = String::from("theta,mu1bar,mu2bar,mu3bar,label,candidates,error\n");
    for s in &samples {
        let cands = s.signature.as_ref().map(|g| g.candidates.join(" ")).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{:.17e},{:.17e},{:.17e},{:.17e},{},\"{cands}\",\"{}\"",
            s.theta,
            s.params.mu1bar,
            s.params.mu2bar,
            s.params.mu3bar,
            s.signature.as_ref().map(|g| g.label.as_str()).unwrap_or(""),
            s.error.clone().unwrap_or_default().replace('"', "'"),
        );
    }

    let portraits: Vec<CliResult<Portrait>> = par_map(&samples, |s| compute(s.params.clone(), cfg.bbox, cfg.tol, &[]));
    let rows = samples.len().div_ceil(GALLERY_COLS);
    let mut svg = Svg::new(GALLERY_CELL * GALLERY_COLS as f64, GALLERY_CELL * rows as f64 + 10.0);
    for (k, (s, p)) in samples.iter().zip(portraits).enumerate() {
        let (col, row) = ((k % GALLERY_COLS) as f64, (k / GALLERY_COLS) as f64);
        let panel = Panel {
            cx: GALLERY_CELL * (col + 0.5),
            cy: GALLERY_CELL * row + 70.0,
            r: 60.0,
        };
        draw(&mut svg, &panel, &p?, 2.0)?;
        svg.text(
            GALLERY_CELL * col + 12.0,
            GALLERY_CELL * row + 148.0,
            &format!("theta={:.3} {}", s.theta, sample_label(s)),
        );
    }
    let meta = serde_json::to_string(cfg).expect("config serializes");
    let body = json!({ "a": cfg.a, "counts": counts, "samples": samples });
    Ok(vec![
        Artifact::new("sweep", Format::Json, json_report(cfg, body)),
        Artifact::new("sweep", Format::Csv, csv_report(cfg, &csv)),
        Artifact::new("sweep", Format::Svg, svg.finish(&meta)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_of_a_linear_function_is_a_straight_line() {
        let k = 20;
        let values: Vec<Vec<Option<f64>>> = (0..=k)
            .map(|i| (0..=k).map(|_| Some(-1.0 + 2.0 * i as f64 / k as f64)).collect())
            .collect();
        let segs = contour(&values, 0.05);
        assert_eq!(segs.len(), k);
        for (a, b) in segs {
            assert!((a[0] - 0.05).abs() < 1e-12 && (b[0] - 0.05).abs() < 1e-12);
        }
    }

    #[test]
    fn seed_grid_stays_inside_the_disc() {
        let s = seed_grid(7, 7);
        assert!(!s.is_empty());
        for x in s {
            let d = to_disc(x[0], x[1]);
            assert!(d[0].hypot(d[1]) < SEED_DISC_RADIUS + 1e-12);
        }
    }

    #[test]
    fn hamiltonian_orbits_conserve_h() {
        let p = RescalingParams::new(-0.5, 0.0, 1.0, 0.0);
        let portrait = compute(p.clone(), 10.0, 1e-10, &[[0.3, -1.0], [0.0, -0.5]]).unwrap();
        let orbits: Vec<&Curve> = portrait.curves.iter().filter(|c| c.kind == "orbit").collect();
        assert_eq!(orbits.len(), 2);
        for c in orbits {
            assert!(h_drift(&p, c) < 1e-6, "{}", h_drift(&p, c));
        }
        // the two saddles at x̄ = ±√2 contribute four separatrices each
        assert_eq!(portrait.curves.iter().filter(|c| c.kind != "orbit").count(), 8);
    }
}
