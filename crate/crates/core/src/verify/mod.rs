//! Quadratic-system checks: the invariant parabola, the derivative of the
//! return map along it, cycle scans and the Sxhh catalog.

mod sxhh;

pub use sxhh::{
    catalog, classify_sxhh, mu1_slice_sweep, ChainLink, ClassifyConfig, Connection, DiscPoint, SweepSample,
    SxhhSignature, SxhhTemplate, TargetId, UNCLASSIFIED,
};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};
use crate::field::{quadratic_from_params, QuadraticParams, VectorField, SCHEMA_VERSION};
use crate::integrate::{IntegratorConfig, Section};
use crate::maps::{return_map, MapConfig};
use crate::parallel::par_map;
use crate::poly::{rat, rat_from_f64, rat_to_f64, Poly, UPoly};
use crate::quad::integrate_gk;

/// `y = c2 x² + c1 x + c0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parabola {
    pub c2: BigRational,
    pub c1: BigRational,
    pub c0: BigRational,
}

impl Parabola {
    pub fn as_poly(&self) -> Poly<1> {
        Poly::from_terms([([2], self.c2.clone()), ([1], self.c1.clone()), ([0], self.c0.clone())])
    }

    pub fn eval(&self, x: f64) -> f64 {
        (rat_to_f64(&self.c2) * x + rat_to_f64(&self.c1)) * x + rat_to_f64(&self.c0)
    }

    pub fn vertex(&self) -> [f64; 2] {
        let x = -rat_to_f64(&self.c1) / (2.0 * rat_to_f64(&self.c2));
        [x, self.eval(x)]
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "c2": self.c2.to_string(),
            "c1": self.c1.to_string(),
            "c0": self.c0.to_string(),
        })
    }
}

/// The invariant parabola of `x' = δx − y + Bx²`, `y' = x + γy + xy` and the
/// value of `γ` for which it is invariant.
pub fn invariant_parabola(b: &BigRational, delta: &BigRational) -> Result<(Parabola, BigRational)> {
    if b.is_zero() || *b == rat(1, 2) {
        return Err(AtlasError::ExcludedB(b.to_string()));
    }
    let one = rat(1, 1);
    let two = rat(2, 1);
    let c2 = b - rat(1, 2);
    let c1 = (&two - &one / b) * delta;
    let c0 = -(b + (&one - &two * b) * delta * delta) / (&two * b * b);
    let gamma = (&one - &two * b) * delta / b;
    Ok((Parabola { c2, c1, c0 }, gamma))
}

/// `ẏ − p′(x) ẋ` restricted to `y = p(x)`; zero iff the parabola is invariant.
pub fn parabola_invariance_residual(q: &QuadraticParams, p: &Parabola) -> UPoly {
    let f = quadratic_from_params(q);
    let y = p.as_poly();
    let subs = [Poly::<1>::var(0), y.clone()];
    let px = f.px().compose(&subs);
    let py = f.py().compose(&subs);
    UPoly::from_poly(&(py - &y.derivative(0) * &px))
}

fn check_pprime_args(b: f64, delta: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() || !delta.is_finite() {
        return Err(AtlasError::InvalidInput(format!(
            "need B > 0 and finite delta, got B = {b}, delta = {delta}"
        )));
    }
    let s = 1.0 - b * delta * delta;
    if s <= 0.0 {
        return Err(AtlasError::SingularOnParabola(s));
    }
    Ok(s)
}

/// `P′(0) = exp(4πδ√B (B − 1)/√(1 − Bδ²))`, the derivative of the return map
/// at the invariant parabola.
pub fn pprime_closed_form(b: f64, delta: f64) -> Result<f64> {
    let s = check_pprime_args(b, delta)?;
    Ok((4.0 * std::f64::consts::PI * delta * b.sqrt() * (b - 1.0) / s.sqrt()).exp())
}

/// The same expression with the factor `(1 − B)`; its reciprocal.
pub fn pprime_opposite_sign(b: f64, delta: f64) -> Result<f64> {
    Ok(1.0 / pprime_closed_form(b, delta)?)
}

/// Integrand data: along the parabola, `div dt = N(x)/D(x) dx`.
struct ParabolaIntegrand {
    b: f64,
    p: f64,
    q: f64,
    k: f64,
}

impl ParabolaIntegrand {
    fn new(b: f64, delta: f64, s: f64) -> Self {
        let p = (1.0 - b) * delta / b;
        let q = ((1.0 - 2.0 * b) * delta * delta + b) / (2.0 * b * b);
        Self {
            b,
            p,
            q,
            k: (s / b).sqrt(),
        }
    }

    fn n(&self, x: f64) -> f64 {
        (1.0 + 2.0 * self.b) * x + self.p
    }

    fn d(&self, x: f64) -> f64 {
        (0.5 * x + self.p) * x + self.q
    }

    /// `N(x)/D(x) + N(−x)/D(−x)`.
    fn folded(&self, x: f64) -> f64 {
        self.n(x) / self.d(x) + self.n(-x) / self.d(-x)
    }

    /// Antiderivative `(1 + 2B) ln D − (4Bp/k) arctan((x + p)/k)`.
    fn antiderivative(&self, x: f64) -> f64 {
        (1.0 + 2.0 * self.b) * self.d(x).ln() - 4.0 * self.b * self.p / self.k * ((x + self.p) / self.k).atan()
    }

    /// `∫_{|x| > x0}` in the symmetric limit, from the antiderivative.
    fn tail(&self, x0: f64) -> f64 {
        let log_part = (1.0 + 2.0 * self.b) * (self.d(x0) / self.d(-x0)).ln();
        let atan_part =
            -4.0 * self.b * self.p / self.k * (((x0 + self.p) / self.k).atan() - ((-x0 + self.p) / self.k).atan());
        let whole = -4.0 * self.b * self.p / self.k * std::f64::consts::PI;
        whole - (log_part + atan_part)
    }

    fn quadrature(&self, x0: f64) -> f64 {
        // split at the scale of the quadratic so the adaptive rule sees both regimes
        let knee = (1.0 + self.p.abs() + self.q.abs().sqrt()).min(x0);
        let (a, _) = integrate_gk(|x| self.folded(x), 0.0, knee, 1e-15, 1e-14);
        let (b, _) = if x0 > knee {
            // u = ln x on the far part
            integrate_gk(
                |u| {
                    let x = u.exp();
                    self.folded(x) * x
                },
                knee.ln(),
                x0.ln(),
                1e-15,
                1e-14,
            )
        } else {
            (0.0, 0.0)
        };
        a + b
    }
}

/// Quadrature of the divergence along the parabola over `[−x0, x0]` plus the
/// analytic tail from the antiderivative.
pub fn pprime_numeric(b: f64, delta: f64, x_cutoff: f64) -> Result<f64> {
    let s = check_pprime_args(b, delta)?;
    if !(x_cutoff >= 10.0) {
        return Err(AtlasError::InvalidInput(format!(
            "x_cutoff must be at least 10, got {x_cutoff}"
        )));
    }
    let g = ParabolaIntegrand::new(b, delta, s);
    Ok((g.quadrature(x_cutoff) + g.tail(x_cutoff)).exp())
}

/// Quadrature over `[−x0, x0]` only, without the tail.
pub fn pprime_truncated(b: f64, delta: f64, x_cutoff: f64) -> Result<f64> {
    let s = check_pprime_args(b, delta)?;
    if !(x_cutoff >= 10.0) {
        return Err(AtlasError::InvalidInput(format!(
            "x_cutoff must be at least 10, got {x_cutoff}"
        )));
    }
    Ok(ParabolaIntegrand::new(b, delta, s).quadrature(x_cutoff).exp())
}

/// Exact antiderivative difference `F(x0) − F(−x0)`; used by tests as an
/// independent reference for the truncated quadrature.
pub fn pprime_antiderivative_window(b: f64, delta: f64, x_cutoff: f64) -> Result<f64> {
    let s = check_pprime_args(b, delta)?;
    let g = ParabolaIntegrand::new(b, delta, s);
    Ok(g.antiderivative(x_cutoff) - g.antiderivative(-x_cutoff))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Section coordinate window, measured from the parabola vertex toward the
    /// origin; the upper end is also capped at 90% of that distance.
    pub annulus: (f64, f64),
    pub samples: usize,
    /// Fixed points must be absent when `|P′(0) − 1|` exceeds this.
    pub margin: f64,
    pub x_cutoff: f64,
    pub map: MapConfig,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            annulus: (1e-3, 0.5),
            samples: 12,
            margin: 1e-2,
            x_cutoff: 1e4,
            map: MapConfig::new(1e3, IntegratorConfig::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub index: usize,
    pub b: f64,
    pub delta: f64,
    pub gamma: f64,
    pub pprime_closed: Option<f64>,
    pub pprime_numeric: Option<f64>,
    pub relerr: Option<f64>,
    pub fixed_points: Option<usize>,
    pub status: String,
    /// Whether `sign(ln P′(0)) = sign(δ)·sign(B − 1)` and the fixed-point
    /// contract hold for this cell.
    pub contract_ok: bool,
}

/// Section from the parabola vertex toward the origin, oriented along the flow.
pub fn parabola_section(q: &QuadraticParams, p: &Parabola) -> Result<(Section<2>, f64)> {
    let v = p.vertex();
    let len = v[0].hypot(v[1]);
    if !(len > 0.0) {
        return Err(AtlasError::InvalidInput("parabola passes through the origin".into()));
    }
    let t = [-v[0] / len, -v[1] / len];
    let s = Section::segment("parabola", v, t, len)?;
    let f = quadratic_from_params(q);
    let mid = f.eval(&s.point(0.5 * len));
    let vn = s.normal[0] * mid[0] + s.normal[1] * mid[1];
    let orient = if vn >= 0.0 { 1 } else { -1 };
    Ok((s.with_orientation(orient), len))
}

fn scan_cell(index: usize, b: f64, delta: f64, cfg: &ScanConfig) -> ScanCell {
    let mut cell = ScanCell {
        index,
        b,
        delta,
        gamma: f64::NAN,
        pprime_closed: None,
        pprime_numeric: None,
        relerr: None,
        fixed_points: None,
        status: "ok".into(),
        contract_ok: false,
    };
    let br = rat_from_f64(b);
    let dr = rat_from_f64(delta);
    let (parabola, gamma) = match invariant_parabola(&br, &dr) {
        Ok(v) => v,
        Err(e) => {
            cell.status = e.to_string();
            return cell;
        }
    };
    cell.gamma = rat_to_f64(&gamma);
    let closed = match pprime_closed_form(b, delta) {
        Ok(v) => v,
        Err(e) => {
            cell.status = e.to_string();
            return cell;
        }
    };
    cell.pprime_closed = Some(closed);
    match pprime_numeric(b, delta, cfg.x_cutoff) {
        Ok(v) => {
            cell.pprime_numeric = Some(v);
            cell.relerr = Some(((v - closed) / closed).abs());
        }
        Err(e) => cell.status = e.to_string(),
    }
    let q = QuadraticParams::new(dr.clone(), gamma, br.clone());
    let sign_ok = {
        let want = (delta.signum() * (b - 1.0).signum()) as i32;
        let l = closed.ln();
        let got = if l > 0.0 {
            1
        } else if l < 0.0 {
            -1
        } else {
            0
        };
        want == got
    };
    let fp = parabola_section(&q, &parabola).and_then(|(s, len)| {
        let hi = cfg.annulus.1.min(0.9 * len);
        let lo = cfg.annulus.0.min(hi);
        let n = cfg.samples.max(2);
        let inputs: Vec<f64> = (0..n).map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64)).collect();
        let f = quadratic_from_params(&q);
        let batch = return_map(&f, &s, &inputs, &cfg.map);
        if let Some(e) = batch.first_error() {
            return Err(e.clone());
        }
        Ok(batch.fixed_point_brackets().len())
    });
    match fp {
        Ok(n) => {
            cell.fixed_points = Some(n);
            let needs_zero = (closed - 1.0).abs() > cfg.margin;
            cell.contract_ok = sign_ok && (!needs_zero || n == 0);
        }
        Err(e) => {
            if cell.status == "ok" {
                cell.status = e.to_string();
            }
            cell.contract_ok = sign_ok;
        }
    }
    cell
}

/// Evaluates every `(B, δ)` cell; failures are recorded per cell.
pub fn cycle_scan(bs: &[f64], deltas: &[f64], cfg: &ScanConfig) -> Vec<ScanCell> {
    let grid: Vec<(usize, f64, f64)> = bs
        .iter()
        .flat_map(|&b| deltas.iter().map(move |&d| (b, d)))
        .enumerate()
        .map(|(i, (b, d))| (i, b, d))
        .collect();
    let mut cells = par_map(&grid, |&(i, b, d)| scan_cell(i, b, d, cfg));
    cells.sort_by_key(|c| c.index);
    cells
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

/// Columns `B,delta,gamma,pprime_closed,pprime_numeric,relerr,fixed_points,status`.
pub fn scan_to_csv(cells: &[ScanCell]) -> String {
    let mut out = String::from("B,delta,gamma,pprime_closed,pprime_numeric,relerr,fixed_points,status\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},\"{}\"\n",
            c.b,
            c.delta,
            if c.gamma.is_nan() {
                String::new()
            } else {
                format!("{:.17e}", c.gamma)
            },
            opt(c.pprime_closed),
            opt(c.pprime_numeric),
            opt(c.relerr),
            c.fixed_points.map(|n| n.to_string()).unwrap_or_default(),
            c.status.replace('"', "'"),
        ));
    }
    out
}

pub fn scan_to_json(cells: &[ScanCell]) -> serde_json::Value {
    serde_json::json!({ "schema_version": SCHEMA_VERSION, "cells": cells })
}

/// `γ = δ = 0` makes the quadratic system reversible, hence integrable.
pub fn is_integrable_case(q: &QuadraticParams) -> bool {
    q.delta.is_zero() && q.gamma.is_zero()
}

/// Whether `r` is the zero polynomial; nonzero residuals report their largest
/// coefficient.
pub fn residual_summary(r: &UPoly) -> (bool, f64) {
    let m = r.coeffs().iter().map(|c| rat_to_f64(&c.abs())).fold(0.0, f64::max);
    (r.is_zero(), m)
}
