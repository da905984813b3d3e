//! Topological classification of family-rescaling portraits against the
//! Sxhh catalog of limit periodic sets joining P4 to P3.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::blowup::{critical_point_on_disc, critical_points, rescaled_field, to_disc, PointLabel, RescalingParams};
use crate::charts::{classify_finite_singularities, BBox, SingularKind, SingularPoint};
use crate::error::{AtlasError, Result};
use crate::field::{PolynomialField, SCHEMA_VERSION};
use crate::integrate::{integrate_until, Direction, IntegratorConfig};
use crate::parallel::par_map;

const CATALOG_JSON: &str = include_str!("../../data/sxhh_catalog.json");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SxhhTemplate {
    pub family: String,
    /// Kinds of the finite singular points visited, as a multiset; `None`
    /// accepts any chain.
    pub chain: Option<Vec<SingularKind>>,
    /// Whether some link of the chain is a fixed connection along `ȳ = 0`.
    pub fixed: Option<bool>,
    pub below_line: Option<bool>,
    pub members: Vec<String>,
}

#[derive(Deserialize)]
struct CatalogFile {
    schema_version: u32,
    templates: Vec<SxhhTemplate>,
}

pub fn catalog() -> &'static [SxhhTemplate] {
    static CAT: OnceLock<Vec<SxhhTemplate>> = OnceLock::new();
    CAT.get_or_init(|| {
        let c: CatalogFile = serde_json::from_str(CATALOG_JSON).expect("bundled catalog parses");
        assert_eq!(c.schema_version, SCHEMA_VERSION);
        c.templates
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetId {
    Finite(usize),
    Boundary(PointLabel),
}

impl fmt::Display for TargetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetId::Finite(i) => write!(f, "S{i}"),
            TargetId::Boundary(p) => write!(f, "{p}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connection {
    pub from: TargetId,
    pub to: TargetId,
    pub min_ybar: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscPoint {
    pub position: [f64; 2],
    pub disc: [f64; 2],
    pub kind: SingularKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub points: Vec<TargetId>,
    pub kinds: Vec<SingularKind>,
    pub fixed: bool,
    pub below_line: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SxhhSignature {
    pub schema_version: u32,
    pub params: RescalingParams,
    pub singular_points: Vec<DiscPoint>,
    pub boundary_points: Vec<PointLabel>,
    pub connections: Vec<Connection>,
    pub chains: Vec<ChainLink>,
    /// A family name such as `Sxhh1`, or `Unclassified`.
    pub label: String,
    pub members: Vec<String>,
    pub candidates: Vec<String>,
}

impl SxhhSignature {
    pub fn is_classified(&self) -> bool {
        self.label != UNCLASSIFIED
    }

    /// True when every matching template requires a chain below `ȳ = 0`.
    pub fn matches_only_below_line(&self) -> bool {
        let below: Vec<&str> = catalog()
            .iter()
            .filter(|t| t.below_line == Some(true))
            .map(|t| t.family.as_str())
            .collect();
        !self.candidates.is_empty() && self.candidates.iter().all(|c| below.contains(&c.as_str()))
    }
}

pub const UNCLASSIFIED: &str = "Unclassified";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub tol: f64,
    pub bbox: BBox,
    /// Initial displacement along an eigenvector.
    pub offset: f64,
    /// Time budget in the normalized clock.
    pub tmax: f64,
    pub saddle_radius: f64,
    pub point_radius: f64,
    pub boundary_radius: f64,
    /// Passing a saddle closer than this without landing on it is ambiguous.
    pub near_pass: f64,
    pub line_tol: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            bbox: BBox::square(50.0),
            offset: 1e-7,
            tmax: 500.0,
            saddle_radius: 1e-5,
            point_radius: 1e-3,
            boundary_radius: 1e-3,
            near_pass: 1e-3,
            line_tol: 1e-9,
        }
    }
}

impl ClassifyConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

fn eigenvector(j: [[f64; 2]; 2], l: f64) -> [f64; 2] {
    let a = [j[0][1], l - j[0][0]];
    let b = [l - j[1][1], j[1][0]];
    let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

struct Tracer<'a> {
    f: &'a PolynomialField,
    points: &'a [SingularPoint],
    boundary: Vec<(PointLabel, [f64; 2])>,
    cfg: &'a ClassifyConfig,
    icfg: IntegratorConfig,
}

struct Trace {
    target: Option<TargetId>,
    min_ybar: f64,
}

impl Tracer<'_> {
    fn radius(&self, k: usize) -> f64 {
        if self.points[k].kind == SingularKind::Saddle {
            self.cfg.saddle_radius
        } else {
            self.cfg.point_radius
        }
    }

    fn trace(&self, origin: usize, start: [f64; 2], dir: Direction) -> Result<Trace> {
        let f = self.f;
        let g = move |x: &[f64; 2]| {
            let v = f.eval_field(*x);
            let s = (1.0 + x[0] * x[0] + x[1].abs()).sqrt();
            [v[0] / s, v[1] / s]
        };
        let sinks: Vec<(PointLabel, [f64; 2])> = self
            .boundary
            .iter()
            .filter(|(l, _)| match dir {
                Direction::Forward => matches!(l, PointLabel::P1 | PointLabel::P3),
                Direction::Backward => matches!(l, PointLabel::P2 | PointLabel::P4),
            })
            .copied()
            .collect();
        let o = self.points[origin].point;
        let mut left_origin = false;
        let mut min_ybar = start[1];
        let mut near: Vec<f64> = vec![f64::INFINITY; self.points.len()];
        let mut hits: Vec<TargetId> = Vec::new();
        let stop = |x: &[f64; 2]| {
            min_ybar = min_ybar.min(x[1]);
            if !left_origin && (x[0] - o[0]).hypot(x[1] - o[1]) > self.cfg.point_radius {
                left_origin = true;
            }
            hits.clear();
            for (k, p) in self.points.iter().enumerate() {
                if k == origin && !left_origin {
                    continue;
                }
                let d = (x[0] - p.point[0]).hypot(x[1] - p.point[1]);
                near[k] = near[k].min(d);
                if d < self.radius(k) {
                    hits.push(TargetId::Finite(k));
                }
            }
            let w = to_disc(x[0], x[1]);
            for (l, q) in &sinks {
                if (w[0] - q[0]).hypot(w[1] - q[1]) < self.cfg.boundary_radius {
                    hits.push(TargetId::Boundary(*l));
                }
            }
            !hits.is_empty()
        };
        let (_, fired) = integrate_until(&g, start, dir, self.cfg.tmax, &self.icfg, stop)?;
        if !fired {
            return Ok(Trace { target: None, min_ybar });
        }
        let target = hits[0];
        if hits.len() > 1 {
            return Err(unresolved(origin, hits[0], hits[1]));
        }
        for (k, p) in self.points.iter().enumerate() {
            if k == origin || TargetId::Finite(k) == target || p.kind != SingularKind::Saddle {
                continue;
            }
            if near[k] < self.cfg.near_pass {
                return Err(unresolved(origin, target, TargetId::Finite(k)));
            }
        }
        Ok(Trace {
            target: Some(target),
            min_ybar,
        })
    }
}

fn unresolved(origin: usize, a: TargetId, b: TargetId) -> AtlasError {
    AtlasError::UnresolvedConnection {
        from: TargetId::Finite(origin).to_string(),
        first: a.to_string(),
        second: b.to_string(),
    }
}

/// Seeds `(start, direction)` for the separatrices of a finite point.
fn seeds(p: &SingularPoint, j: [[f64; 2]; 2], offset: f64) -> Vec<([f64; 2], Direction)> {
    let x = p.point;
    let along = |v: [f64; 2], s: f64| [x[0] + s * offset * v[0], x[1] + s * offset * v[1]];
    let mut out = Vec::new();
    match p.kind {
        SingularKind::Saddle => {
            let (l1, l2) = (p.eigenvalues[0].re, p.eigenvalues[1].re);
            let (ls, lu) = if l1 < l2 { (l1, l2) } else { (l2, l1) };
            let (vs, vu) = (eigenvector(j, ls), eigenvector(j, lu));
            for s in [1.0, -1.0] {
                out.push((along(vu, s), Direction::Forward));
                out.push((along(vs, s), Direction::Backward));
            }
        }
        SingularKind::SaddleNode => {
            let (l1, l2) = (p.eigenvalues[0].re, p.eigenvalues[1].re);
            let (lc, lh) = if l1.abs() < l2.abs() { (l1, l2) } else { (l2, l1) };
            let (vc, vh) = (eigenvector(j, lc), eigenvector(j, lh));
            let hdir = if lh > 0.0 {
                Direction::Forward
            } else {
                Direction::Backward
            };
            for s in [1.0, -1.0] {
                out.push((along(vh, s), hdir));
                out.push((along(vc, s), Direction::Forward));
                out.push((along(vc, s), Direction::Backward));
            }
        }
        _ => {}
    }
    out
}

fn chain_kind(k: SingularKind) -> bool {
    matches!(k, SingularKind::Saddle | SingularKind::SaddleNode)
}

/// Locates and classifies the finite singular points of the family
/// rescaling, traces saddle and saddle-node separatrices, collects the chains
/// from P4 to P3 and matches them against the catalog.
pub fn classify_sxhh(p: &RescalingParams, cfg: &ClassifyConfig) -> Result<SxhhSignature> {
    let cps = critical_points(p.a)?;
    if !(p.a < 0.0) {
        return Err(AtlasError::InvalidInput(format!(
            "classification needs a < 0, got {}",
            p.a
        )));
    }
    let f = rescaled_field(p);
    let points = classify_finite_singularities(&f, &cfg.bbox)?;
    let boundary: Vec<(PointLabel, [f64; 2])> = cps.iter().map(|c| (c.label, critical_point_on_disc(c))).collect();
    let tracer = Tracer {
        f: &f,
        points: &points,
        boundary,
        cfg,
        icfg: IntegratorConfig::with_tol(cfg.tol)?,
    };

    let mut connections = Vec::new();
    for (k, sp) in points.iter().enumerate() {
        let j = f.jacobian(sp.point);
        for (start, dir) in seeds(sp, j, cfg.offset) {
            let tr = tracer.trace(k, start, dir)?;
            let Some(t) = tr.target else { continue };
            if t == TargetId::Finite(k) && sp.kind != SingularKind::Saddle {
                continue;
            }
            let (from, to) = match dir {
                Direction::Forward => (TargetId::Finite(k), t),
                Direction::Backward => (t, TargetId::Finite(k)),
            };
            connections.push(Connection {
                from,
                to,
                min_ybar: tr.min_ybar,
            });
        }
    }

    let chains = find_chains(&points, &connections, p, cfg);
    let mut families: BTreeSet<String> = BTreeSet::new();
    for c in &chains {
        for t in catalog() {
            if template_matches(t, c) {
                families.insert(t.family.clone());
            }
        }
    }
    let candidates: Vec<String> = families.into_iter().collect();
    let (label, members) = if candidates.len() == 1 {
        let t = catalog()
            .iter()
            .find(|t| t.family == candidates[0])
            .expect("matched family exists");
        (t.family.clone(), t.members.clone())
    } else {
        (UNCLASSIFIED.to_string(), Vec::new())
    };
    let mut boundary_points: BTreeSet<PointLabel> = BTreeSet::new();
    for c in &chains {
        for t in &c.points {
            if let TargetId::Boundary(l) = t {
                boundary_points.insert(*l);
            }
        }
    }
    Ok(SxhhSignature {
        schema_version: SCHEMA_VERSION,
        params: p.clone(),
        singular_points: points
            .iter()
            .map(|s| DiscPoint {
                position: s.point,
                disc: to_disc(s.point[0], s.point[1]),
                kind: s.kind,
            })
            .collect(),
        boundary_points: boundary_points.into_iter().collect(),
        connections,
        chains,
        label,
        members,
        candidates,
    })
}

fn find_chains(
    points: &[SingularPoint],
    conns: &[Connection],
    p: &RescalingParams,
    cfg: &ClassifyConfig,
) -> Vec<ChainLink> {
    let start = TargetId::Boundary(PointLabel::P4);
    let goal = TargetId::Boundary(PointLabel::P3);
    let mut out = Vec::new();
    let mut path = vec![start];
    let mut mins: Vec<f64> = Vec::new();
    dfs(points, conns, goal, &mut path, &mut mins, &mut out);
    let on_line = |t: &TargetId| match t {
        TargetId::Finite(k) => points[*k].point[1].abs() <= cfg.line_tol,
        TargetId::Boundary(_) => false,
    };
    let mut chains: Vec<ChainLink> = out
        .into_iter()
        .map(|(path, mins)| {
            let kinds = path
                .iter()
                .filter_map(|t| match t {
                    TargetId::Finite(k) => Some(points[*k].kind),
                    _ => None,
                })
                .collect();
            let fixed = p.mu1bar == 0.0 && path.windows(2).any(|w| on_line(&w[0]) && on_line(&w[1]));
            let below_line = path.iter().any(|t| match t {
                TargetId::Finite(k) => points[*k].point[1] < -cfg.line_tol,
                _ => false,
            }) || mins.iter().any(|&m| m < -cfg.line_tol);
            ChainLink {
                points: path,
                kinds,
                fixed,
                below_line,
            }
        })
        .collect();
    chains.sort_by(|a, b| a.points.cmp(&b.points));
    chains.dedup_by(|a, b| a.points == b.points);
    chains
}

fn dfs(
    points: &[SingularPoint],
    conns: &[Connection],
    goal: TargetId,
    path: &mut Vec<TargetId>,
    mins: &mut Vec<f64>,
    out: &mut Vec<(Vec<TargetId>, Vec<f64>)>,
) {
    let here = *path.last().expect("path is nonempty");
    for c in conns.iter().filter(|c| c.from == here) {
        if c.to == goal {
            if path.len() > 1 {
                let mut m = mins.clone();
                m.push(c.min_ybar);
                let mut p = path.clone();
                p.push(goal);
                out.push((p, m));
            }
            continue;
        }
        let TargetId::Finite(k) = c.to else { continue };
        if !chain_kind(points[k].kind) || path.contains(&c.to) {
            continue;
        }
        path.push(c.to);
        mins.push(c.min_ybar);
        dfs(points, conns, goal, path, mins, out);
        path.pop();
        mins.pop();
    }
}

fn template_matches(t: &SxhhTemplate, c: &ChainLink) -> bool {
    if let Some(chain) = &t.chain {
        let mut want = chain.clone();
        let mut got = c.kinds.clone();
        want.sort_by_key(|k| *k as u8);
        got.sort_by_key(|k| *k as u8);
        if want != got {
            return false;
        }
    }
    t.fixed.is_none_or(|f| f == c.fixed) && t.below_line.is_none_or(|b| b == c.below_line)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    pub theta: f64,
    pub params: RescalingParams,
    pub signature: Option<SxhhSignature>,
    pub error: Option<String>,
}

/// `n` points of the slice `μ̄1 = 0` of the parameter sphere at angles
/// `2π(3k + 1)/(3n)`, which avoid the poles `μ̄2 = 0`.
pub fn mu1_slice_sweep(a: f64, n: usize, cfg: &ClassifyConfig) -> Vec<SweepSample> {
    let thetas: Vec<f64> = (0..n)
        .map(|k| 2.0 * std::f64::consts::PI * (3 * k + 1) as f64 / (3 * n) as f64)
        .collect();
    par_map(&thetas, |&theta| {
        let params = RescalingParams::on_mu1_slice(a, theta);
        match classify_sxhh(&params, cfg) {
            Ok(s) => SweepSample {
                theta,
                params,
                signature: Some(s),
                error: None,
            },
            Err(e) => SweepSample {
                theta,
                params,
                signature: None,
                error: Some(e.to_string()),
            },
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(m2: f64, m3: f64) -> SxhhSignature {
        classify_sxhh(&RescalingParams::new(-0.5, 0.0, m2, m3), &ClassifyConfig::default()).unwrap()
    }

    #[test]
    fn catalog_loads() {
        let c = catalog();
        assert_eq!(c.len(), 10);
        assert!(c.iter().all(|t| t.members.len() == 3));
        assert_eq!(c[0].members[0], "Sxhh1a");
    }

    #[test]
    fn negative_mu2_is_single_saddle() {
        let s = classify(-1.0, 0.0);
        assert_eq!(s.label, "Sxhh1", "{s:#?}");
        let s = classify(-0.8, 0.6);
        assert_eq!(s.label, "Sxhh1", "{s:#?}");
    }

    #[test]
    fn two_saddles_on_the_line_are_fixed() {
        let s = classify(1.0, 0.0);
        assert_eq!(s.label, "Sxhh5", "{s:#?}");
        let s = classify(0.9, 0.3);
        assert_eq!(s.label, "Sxhh5", "{s:#?}");
        assert!(s.chains.iter().any(|c| c.fixed));
    }

    #[test]
    fn chains_stay_above_the_line() {
        for s in [classify(-1.0, 0.0), classify(1.0, 0.0)] {
            assert!(s.chains.iter().all(|c| !c.below_line));
            assert!(!s.matches_only_below_line());
        }
    }

    #[test]
    fn rejects_nonnegative_a() {
        assert!(classify_sxhh(&RescalingParams::new(0.5, 0.0, 1.0, 0.0), &ClassifyConfig::default()).is_err());
        assert!(classify_sxhh(&RescalingParams::new(0.2, 0.0, 1.0, 0.0), &ClassifyConfig::default()).is_err());
    }

    #[test]
    fn template_matching_is_a_multiset_comparison() {
        let c = ChainLink {
            points: vec![],
            kinds: vec![SingularKind::SaddleNode, SingularKind::Saddle],
            fixed: true,
            below_line: false,
        };
        let fams: Vec<&str> = catalog()
            .iter()
            .filter(|t| template_matches(t, &c))
            .map(|t| t.family.as_str())
            .collect();
        assert_eq!(fams, ["Sxhh7", "Sxhh8"]);
        let below = ChainLink { below_line: true, ..c };
        let fams: Vec<&str> = catalog()
            .iter()
            .filter(|t| template_matches(t, &below))
            .map(|t| t.family.as_str())
            .collect();
        assert_eq!(fams, ["Sxhh9", "Sxhh10"]);
    }
}
