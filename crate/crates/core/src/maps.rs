//! Transition, return, displacement and Dulac maps between sections.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::blowup::{blown_up_field_3d, critical_points, PointLabel, RescalingParams};
use crate::error::{AtlasError, Result};
use crate::field::{PolynomialField, VectorField, SCHEMA_VERSION};
use crate::integrate::{integral_to_crossing, next_crossing, Direction, IntegratorConfig, Section};
use crate::parallel::par_map;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapConfig {
    pub tmax: f64,
    pub integrator: IntegratorConfig,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            tmax: 1e3,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl MapConfig {
    pub fn new(tmax: f64, integrator: IntegratorConfig) -> Self {
        Self { tmax, integrator }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionMapSample {
    pub input: f64,
    pub output: f64,
    pub flight_time: f64,
    pub entry: String,
    pub exit: String,
}

/// One input of a batch with its sample or the error that stopped it.
#[derive(Clone, Debug, PartialEq)]
pub struct MapOutcome {
    pub input: f64,
    pub sample: Result<SectionMapSample>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct MapBatch {
    pub outcomes: Vec<MapOutcome>,
}

impl MapBatch {
    fn from_outcomes(mut outcomes: Vec<MapOutcome>) -> Self {
        outcomes.sort_by(|a, b| a.input.total_cmp(&b.input));
        Self { outcomes }
    }

    pub fn samples(&self) -> impl Iterator<Item = &SectionMapSample> {
        self.outcomes.iter().filter_map(|o| o.sample.as_ref().ok())
    }

    pub fn all_ok(&self) -> bool {
        self.outcomes.iter().all(|o| o.sample.is_ok())
    }

    pub fn first_error(&self) -> Option<&AtlasError> {
        self.outcomes.iter().find_map(|o| o.sample.as_ref().err())
    }

    /// Whether the successful outputs are strictly monotone in the input.
    pub fn is_monotone(&self) -> bool {
        let out: Vec<f64> = self.samples().map(|s| s.output).collect();
        let inc = out.windows(2).all(|w| w[1] > w[0]);
        let dec = out.windows(2).all(|w| w[1] < w[0]);
        inc || dec
    }

    /// Indices `k` with `output − input` changing sign between samples
    /// `k` and `k + 1` (successful samples only).
    pub fn fixed_point_brackets(&self) -> Vec<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self.samples().map(|s| (s.input, s.output - s.input)).collect();
        sign_change_brackets(&pts)
    }

    /// Columns `input,output,flight_time,status`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("input,output,flight_time,status\n");
        for o in &self.outcomes {
            match &o.sample {
                Ok(s) => out.push_str(&format!(
                    "{:.17e},{:.17e},{:.17e},ok\n",
                    o.input, s.output, s.flight_time
                )),
                Err(e) => out.push_str(&format!("{:.17e},,,\"{}\"\n", o.input, e.to_string().replace('"', "'"))),
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "samples": self.outcomes.iter().map(|o| match &o.sample {
                Ok(s) => serde_json::json!({
                    "input": o.input,
                    "output": s.output,
                    "flight_time": s.flight_time,
                    "entry": s.entry,
                    "exit": s.exit,
                    "status": "ok",
                }),
                Err(e) => serde_json::json!({ "input": o.input, "status": e.to_string() }),
            }).collect::<Vec<_>>(),
        })
    }
}

fn sign_change_brackets(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    pts.windows(2)
        .filter(|w| w[0].1 == 0.0 || w[0].1.signum() != w[1].1.signum() && w[1].1 != 0.0)
        .map(|w| (w[0].0, w[1].0))
        .collect()
}

/// Flows each point of `s_from` (by coordinate) in `dir` to its first valid
/// crossing of `s_to`.
pub fn transition_map<V>(
    f: &V,
    s_from: &Section<2>,
    s_to: &Section<2>,
    inputs: &[f64],
    dir: Direction,
    cfg: &MapConfig,
) -> MapBatch
where
    V: VectorField<2> + ?Sized,
{
    let outcomes = par_map(inputs, |&u| MapOutcome {
        input: u,
        sample: next_crossing(f, s_from.point(u), s_to, dir, cfg.tmax, &cfg.integrator).map(|c| SectionMapSample {
            input: u,
            output: c.coord,
            flight_time: c.time.abs(),
            entry: s_from.id.clone(),
            exit: s_to.id.clone(),
        }),
    });
    MapBatch::from_outcomes(outcomes)
}

fn single_return<V>(f: &V, s: &Section<2>, u: f64, cfg: &MapConfig) -> Result<SectionMapSample>
where
    V: VectorField<2> + ?Sized,
{
    match next_crossing(f, s.point(u), s, Direction::Forward, cfg.tmax, &cfg.integrator) {
        Ok(c) => Ok(SectionMapSample {
            input: u,
            output: c.coord,
            flight_time: c.time,
            entry: s.id.clone(),
            exit: s.id.clone(),
        }),
        Err(AtlasError::NoCrossing { .. }) | Err(AtlasError::BlowupDetected { .. }) => {
            Err(AtlasError::NoReturn { section: s.id.clone() })
        }
        Err(e) => Err(e),
    }
}

/// First-return map of `s`. Give the section an orientation so that only
/// crossings in the direction of the starting flow count.
pub fn return_map<V>(f: &V, s: &Section<2>, inputs: &[f64], cfg: &MapConfig) -> MapBatch
where
    V: VectorField<2> + ?Sized,
{
    let outcomes = par_map(inputs, |&u| MapOutcome {
        input: u,
        sample: single_return(f, s, u, cfg),
    });
    MapBatch::from_outcomes(outcomes)
}

/// Bisection on a sign change of `g` in `[lo, hi]` down to width `tol`.
pub fn bisect_root<G>(g: G, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let mut glo = g(lo)?;
    let ghi = g(hi)?;
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    if glo.signum() == ghi.signum() {
        return Err(AtlasError::InvalidInput(format!("no sign change on [{lo}, {hi}]")));
    }
    while (hi - lo).abs() > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            break;
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locates a fixed point of the return map inside a bracket, to 1e−10.
pub fn return_fixed_point<V>(f: &V, s: &Section<2>, bracket: (f64, f64), cfg: &MapConfig) -> Result<f64>
where
    V: VectorField<2> + ?Sized,
{
    bisect_root(
        |u| single_return(f, s, u, cfg).map(|r| r.output - u),
        bracket.0,
        bracket.1,
        1e-10,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnDerivative {
    pub input: f64,
    pub output: f64,
    pub return_time: f64,
    /// `exp(∫ div dt)` along the return arc.
    pub divergence_factor: f64,
    /// Normal velocity at the start over normal velocity at the return.
    pub normal_velocity_ratio: f64,
    /// `normal_velocity_ratio · divergence_factor`.
    pub derivative: f64,
    /// Central difference of the return map.
    pub finite_difference: f64,
}

impl ReturnDerivative {
    pub fn relative_disagreement(&self) -> f64 {
        ((self.derivative - self.finite_difference) / self.derivative).abs()
    }
}

/// Derivative of the first-return map at `u` from the divergence integral.
pub fn return_derivative_via_divergence<V>(f: &V, s: &Section<2>, u: f64, cfg: &MapConfig) -> Result<ReturnDerivative>
where
    V: VectorField<2> + ?Sized,
{
    let x0 = s.point(u);
    let arc = integral_to_crossing(f, x0, s, Direction::Forward, cfg.tmax, &cfg.integrator, |x| {
        f.divergence(x)
    })
    .map_err(|e| match e {
        AtlasError::NoCrossing { .. } => AtlasError::NoReturn { section: s.id.clone() },
        e => e,
    })?;
    let v0 = f.eval(&x0);
    let vn0 = s.normal[0] * v0[0] + s.normal[1] * v0[1];
    let ratio = vn0 / arc.crossing.normal_velocity;
    let div = arc.value.exp();
    let h = 1e-4 * u.abs().max(1e-2);
    let p = single_return(f, s, u + h, cfg)?.output;
    let m = single_return(f, s, u - h, cfg)?.output;
    Ok(ReturnDerivative {
        input: u,
        output: arc.crossing.coord,
        return_time: arc.crossing.time,
        divergence_factor: div,
        normal_velocity_ratio: ratio,
        derivative: ratio * div,
        finite_difference: (p - m) / (2.0 * h),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleData {
    pub point: [f64; 2],
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau: f64,
}

/// Hyperbolicity ratio from a Jacobian with real eigenvalues of opposite sign.
pub fn saddle_from_jacobian(point: [f64; 2], j: [[f64; 2]; 2]) -> Result<SaddleData> {
    let m = Matrix2::new(j[0][0], j[0][1], j[1][0], j[1][1]);
    let ev = m.complex_eigenvalues();
    let (a, b) = (ev[0], ev[1]);
    let scale = a.norm().max(b.norm()).max(1e-300);
    if a.im.abs() > 1e-12 * scale || a.re * b.re >= 0.0 {
        return Err(AtlasError::NotASaddle { l1: a.re, l2: b.re });
    }
    let (pos, neg) = if a.re > 0.0 { (a.re, b.re) } else { (b.re, a.re) };
    Ok(SaddleData {
        point,
        lambda1: pos,
        lambda2: -neg,
        tau: -neg / pos,
    })
}

pub fn hyperbolicity_ratio(f: &PolynomialField, point: [f64; 2]) -> Result<SaddleData> {
    saddle_from_jacobian(point, f.jacobian(point))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerFit {
    pub exponent: f64,
    /// `C` in `output ≈ C · input^exponent`.
    pub prefactor: f64,
    /// Largest absolute residual in log space.
    pub residual: f64,
}

/// Least-squares fit of `ln y = ln C + p ln x`.
pub fn fit_power_law(pts: &[(f64, f64)]) -> Result<PowerFit> {
    let logs: Vec<(f64, f64)> = pts
        .iter()
        .filter(|(x, y)| *x > 0.0 && y.abs() > 0.0)
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if logs.len() < 2 {
        return Err(AtlasError::InvalidInput(
            "power-law fit needs two positive samples".into(),
        ));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(AtlasError::InvalidInput("power-law fit needs distinct inputs".into()));
    }
    let p = sxy / sxx;
    let c = my - p * mx;
    let residual = logs.iter().map(|(x, y)| (y - c - p * x).abs()).fold(0.0, f64::max);
    Ok(PowerFit {
        exponent: p,
        prefactor: c.exp(),
        residual,
    })
}

/// Geometric ladder `10^start, 10^(start − step), …` down to `10^stop`.
pub fn log_ladder(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((start - stop) / step).round() as usize;
    (0..=n).map(|k| 10f64.powf(start - step * k as f64)).collect()
}

/// Default Dulac ladder: `1e−2, 1e−2.5, …, 1e−5`.
pub fn default_dulac_ladder() -> Vec<f64> {
    log_ladder(-2.0, -5.0, 0.5)
}

/// Integrator settings for maps whose outputs span many decades.
pub fn relative_config(rtol: f64, tmax: f64) -> MapConfig {
    MapConfig::new(tmax, IntegratorConfig::relative(rtol, 1e-300))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DulacFit {
    pub fit: PowerFit,
    pub batch: MapBatch,
}

/// Samples the transition from `entry` to `exit` past a saddle and fits the
/// log–log slope. Inputs must stay on one side of the stable manifold.
pub fn dulac_exponent_fit<V>(
    f: &V,
    entry: &Section<2>,
    exit: &Section<2>,
    inputs: &[f64],
    cfg: &MapConfig,
) -> Result<DulacFit>
where
    V: VectorField<2> + ?Sized,
{
    let batch = transition_map(f, entry, exit, inputs, Direction::Forward, cfg);
    if let Some(e) = batch.first_error() {
        return Err(e.clone());
    }
    let pts: Vec<(f64, f64)> = batch.samples().map(|s| (s.input.abs(), s.output)).collect();
    Ok(DulacFit {
        fit: fit_power_law(&pts)?,
        batch,
    })
}

/// `x' = (x² + η)(1 + C x²)`, `y' = −λ y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleNodeModel {
    pub lambda: f64,
    pub c: f64,
    pub eta: f64,
}

impl VectorField<2> for SaddleNodeModel {
    fn eval(&self, p: &[f64; 2]) -> [f64; 2] {
        let x2 = p[0] * p[0];
        [(x2 + self.eta) * (1.0 + self.c * x2), -self.lambda * p[1]]
    }

    fn divergence(&self, p: &[f64; 2]) -> f64 {
        let x = p[0];
        2.0 * x * (1.0 + self.c * x * x) + (x * x + self.eta) * 2.0 * self.c * x - self.lambda
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaddleNodeData {
    pub eta: f64,
    pub lambda: f64,
    pub x0_cap: f64,
    pub eps: f64,
    /// `|D(2y)/(2 D(y)) − 1|` for the two seeds.
    pub linearity_defect: f64,
    pub flight_time: f64,
}

/// `exp(−2λ arctan(X0/√η)/√η)`, the central coefficient when `C = 0`.
pub fn saddle_node_eps_closed_form(lambda: f64, eta: f64, x0: f64) -> f64 {
    let s = eta.sqrt();
    (-2.0 * lambda * (x0 / s).atan() / s).exp()
}

pub const CENTRAL_SEEDS: [f64; 2] = [1e-3, 2e-3];

/// Measures the central transition of the saddle-node model from
/// `{x = −X0}` to `{x = X0}` for each `η`.
pub fn saddle_node_central_eps(
    lambda: f64,
    c: f64,
    etas: &[f64],
    x0: f64,
    cfg: &MapConfig,
) -> Result<Vec<SaddleNodeData>> {
    if let Some(&bad) = etas.iter().find(|e| !(**e > 0.0)) {
        return Err(AtlasError::NonpositiveEta(bad));
    }
    if !(x0 > 0.0) {
        return Err(AtlasError::NonpositiveArgument(x0));
    }
    let entry = Section::segment("x=-X0", [-x0, 0.0], [0.0, 1.0], 1.0)?;
    let exit = Section::segment("x=X0", [x0, 0.0], [0.0, 1.0], 1.0)?;
    let runs = par_map(etas, |&eta| -> Result<SaddleNodeData> {
        let model = SaddleNodeModel { lambda, c, eta };
        let batch = transition_map(&model, &entry, &exit, &CENTRAL_SEEDS, Direction::Forward, cfg);
        if let Some(e) = batch.first_error() {
            return Err(e.clone());
        }
        let s: Vec<&SectionMapSample> = batch.samples().collect();
        let e1 = s[0].output / s[0].input;
        let e2 = s[1].output / s[1].input;
        Ok(SaddleNodeData {
            eta,
            lambda,
            x0_cap: x0,
            eps: e1,
            linearity_defect: (e2 / e1 - 1.0).abs(),
            flight_time: s[0].flight_time,
        })
    });
    let mut out: Vec<SaddleNodeData> = runs.into_iter().collect::<Result<_>>()?;
    out.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    Ok(out)
}

/// Slope of `ln ε` against `1/√η` by least squares.
pub fn eps_log_slope(data: &[SaddleNodeData]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = data.iter().map(|d| (d.eta.sqrt().recip().exp(), d.eps)).collect();
    // fit_power_law works in logs: ln(exp(u)) = u
    Ok(fit_power_law(&pts)?.exponent)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatSample {
    pub input: f64,
    pub output: Option<f64>,
    pub flight_time: Option<f64>,
    pub timed_out: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub samples: Vec<FlatSample>,
    /// Local log–log slopes between consecutive successful samples, from the
    /// largest input downward.
    pub local_slopes: Vec<f64>,
    pub strictly_increasing: bool,
}

/// Stable-center transition of the saddle-node (`η = 0`) from `{y = Y0}` to
/// `{x = X0}`, sampled at the given `x` inputs in `(0, X0]`.
pub fn stable_center_flatness(
    lambda: f64,
    c: f64,
    y0: f64,
    x0: f64,
    inputs: &[f64],
    cfg: &MapConfig,
) -> Result<FlatnessReport> {
    if let Some(&bad) = inputs.iter().find(|x| !(**x > 0.0) || **x > x0) {
        return Err(AtlasError::InvalidInput(format!("input {bad} outside (0, X0]")));
    }
    let model = SaddleNodeModel { lambda, c, eta: 0.0 };
    let entry = Section::segment("y=Y0", [0.0, y0], [1.0, 0.0], 2.0 * x0)?;
    let exit = Section::segment("x=X0", [x0, 0.0], [0.0, 1.0], 2.0 * y0.abs())?;
    let mut samples = par_map(inputs, |&x| {
        if x == x0 {
            return FlatSample {
                input: x,
                output: Some(y0),
                flight_time: Some(0.0),
                timed_out: false,
            };
        }
        match next_crossing(&model, [x, y0], &exit, Direction::Forward, cfg.tmax, &cfg.integrator) {
            Ok(cr) => FlatSample {
                input: x,
                output: Some(cr.coord),
                flight_time: Some(cr.time),
                timed_out: false,
            },
            Err(_) => FlatSample {
                input: x,
                output: None,
                flight_time: None,
                timed_out: true,
            },
        }
    });
    let _ = entry;
    samples.sort_by(|a, b| b.input.total_cmp(&a.input));
    let ok: Vec<(f64, f64)> = samples
        .iter()
        .filter_map(|s| s.output.filter(|o| *o > 0.0).map(|o| (s.input, o)))
        .collect();
    let local_slopes: Vec<f64> = ok
        .windows(2)
        .map(|w| (w[1].1.ln() - w[0].1.ln()) / (w[1].0.ln() - w[0].0.ln()))
        .collect();
    let strictly_increasing = local_slopes.len() >= 2 && local_slopes.windows(2).all(|w| w[1] > w[0]);
    Ok(FlatnessReport {
        samples,
        local_slopes,
        strictly_increasing,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSample {
    pub input: f64,
    pub forward: f64,
    pub backward: f64,
    pub displacement: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisplacementOutcome {
    pub input: f64,
    pub sample: Result<DisplacementSample>,
}

fn displacement_at<V>(
    f: &V,
    s_a: &Section<2>,
    s_b: &Section<2>,
    s_mid: &Section<2>,
    u: f64,
    cfg: &MapConfig,
) -> Result<DisplacementSample>
where
    V: VectorField<2> + ?Sized,
{
    let fwd = next_crossing(f, s_a.point(u), s_mid, Direction::Forward, cfg.tmax, &cfg.integrator)?;
    let bwd = next_crossing(f, s_b.point(u), s_mid, Direction::Backward, cfg.tmax, &cfg.integrator)?;
    Ok(DisplacementSample {
        input: u,
        forward: fwd.coord,
        backward: bwd.coord,
        displacement: fwd.coord - bwd.coord,
    })
}

/// Flows the point with coordinate `u` on `s_a` forward and the point with
/// coordinate `u` on `s_b` backward to `s_mid`; the displacement is the
/// difference of the arrival coordinates. With `s_a = s_b` its zeros are
/// periodic orbits.
pub fn displacement_map<V>(
    f: &V,
    s_a: &Section<2>,
    s_b: &Section<2>,
    s_mid: &Section<2>,
    inputs: &[f64],
    cfg: &MapConfig,
) -> Vec<DisplacementOutcome>
where
    V: VectorField<2> + ?Sized,
{
    let mut out = par_map(inputs, |&u| DisplacementOutcome {
        input: u,
        sample: displacement_at(f, s_a, s_b, s_mid, u, cfg),
    });
    out.sort_by(|a, b| a.input.total_cmp(&b.input));
    out
}

pub fn displacement_brackets(outcomes: &[DisplacementOutcome]) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = outcomes
        .iter()
        .filter_map(|o| o.sample.as_ref().ok().map(|s| (o.input, s.displacement)))
        .collect();
    sign_change_brackets(&pts)
}

/// Zero of the displacement map inside a bracket, to 1e−10.
pub fn displacement_zero<V>(
    f: &V,
    s_a: &Section<2>,
    s_b: &Section<2>,
    s_mid: &Section<2>,
    bracket: (f64, f64),
    cfg: &MapConfig,
) -> Result<f64>
where
    V: VectorField<2> + ?Sized,
{
    bisect_root(
        |u| displacement_at(f, s_a, s_b, s_mid, u, cfg).map(|d| d.displacement),
        bracket.0,
        bracket.1,
        1e-10,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuDulacFit {
    pub label: PointLabel,
    pub nus: Vec<f64>,
    /// Distance of the exit point from the singular value of `ȳ`.
    pub outputs: Vec<f64>,
    pub slope: f64,
    /// `|λ_ȳ / λ_ρ|` from the eigenvalue table.
    pub expected: f64,
}

/// Passage near a boundary point on the leaf `rρ = ν` of the 3D blown-up
/// field, between `{ρ = ρ0}` and `{r = r0}`, started at `ȳ = ȳ* + dy`. The
/// log–log slope of the exit offset `|ȳ − ȳ*|` against `ν` tends to the
/// hyperbolicity ratio `|λ_ȳ / λ_ρ|`. Offsets near `P1`, `P2` (where `ȳ* = 0`)
/// keep full relative precision.
pub fn nu_dulac_slope(
    p: &RescalingParams,
    label: PointLabel,
    rho0: f64,
    r0: f64,
    dy: f64,
    nus: &[f64],
    cfg: &MapConfig,
) -> Result<NuDulacFit> {
    let cp = critical_points(p.a)?
        .into_iter()
        .find(|c| c.label == label)
        .expect("four critical points");
    let f = blown_up_field_3d(p, cp.chart);
    // the flow goes from ρ0 to r0 forward when r is the unstable direction
    let dir = if cp.eigenvalues[0] > 0.0 {
        Direction::Forward
    } else {
        Direction::Backward
    };
    let exit = Section::new("r=r0", [r0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 1e3)?;
    let outputs = par_map(nus, |&nu| -> Result<f64> {
        let x0 = [nu / rho0, rho0, cp.ybar + dy];
        let cr = next_crossing(&f, x0, &exit, dir, cfg.tmax, &cfg.integrator)?;
        Ok((cr.state[2] - cp.ybar).abs())
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let pts: Vec<(f64, f64)> = nus.iter().copied().zip(outputs.iter().copied()).collect();
    let fit = fit_power_law(&pts)?;
    Ok(NuDulacFit {
        label,
        nus: nus.to_vec(),
        outputs,
        slope: fit.exponent,
        expected: cp.ratio_in_disc(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rotation(p: &[f64; 2]) -> [f64; 2] {
        [-p[1], p[0]]
    }

    fn ray(id: &str, angle: f64) -> Section<2> {
        Section::segment(id, [0.0, 0.0], [angle.cos(), angle.sin()], 10.0)
            .unwrap()
            .with_orientation(1)
    }

    fn cfg() -> MapConfig {
        MapConfig::new(100.0, IntegratorConfig::with_tol(1e-12).unwrap())
    }

    #[test]
    fn rotation_transition_is_identity() {
        let b = transition_map(
            &rotation,
            &ray("a", 0.0),
            &ray("b", PI / 2.0),
            &[0.5, 1.0, 2.0],
            Direction::Forward,
            &cfg(),
        );
        assert!(b.all_ok());
        for s in b.samples() {
            assert!((s.output - s.input).abs() < 1e-10);
            assert!((s.flight_time - PI / 2.0).abs() < 1e-9);
        }
        assert!(b.is_monotone());
    }

    #[test]
    fn shear_transition() {
        let f = |p: &[f64; 2]| [1.0, p[1]];
        let a = Section::segment("x=0", [0.0, 0.0], [0.0, 1.0], 10.0).unwrap();
        let b = Section::segment("x=1", [1.0, 0.0], [0.0, 1.0], 10.0).unwrap();
        let batch = transition_map(&f, &a, &b, &[0.3, -0.2, 1.0], Direction::Forward, &cfg());
        let ins: Vec<f64> = batch.outcomes.iter().map(|o| o.input).collect();
        assert_eq!(ins, vec![-0.2, 0.3, 1.0]);
        for s in batch.samples() {
            assert!((s.output - s.input * std::f64::consts::E).abs() < 1e-10);
        }
    }

    #[test]
    fn failing_samples_are_individual() {
        let f = |p: &[f64; 2]| [1.0, p[1]];
        let a = Section::segment("x=0", [0.0, 0.0], [0.0, 1.0], 10.0).unwrap();
        let b = Section::segment("x=1", [1.0, 0.0], [0.0, 1.0], 1.0).unwrap();
        let batch = transition_map(
            &f,
            &a,
            &b,
            &[0.1, 5.0],
            Direction::Forward,
            &MapConfig::new(3.0, IntegratorConfig::default()),
        );
        assert!(batch.outcomes[0].sample.is_ok());
        assert!(batch.outcomes[1].sample.is_err());
        assert!(batch.to_csv().lines().nth(2).unwrap().contains("no crossing"));
    }

    #[test]
    fn rotation_return_is_identity() {
        let s = ray("s", 0.0);
        let b = return_map(&rotation, &s, &[0.5, 1.5], &cfg());
        for x in b.samples() {
            assert!((x.output - x.input).abs() < 1e-10);
            assert!((x.flight_time - 2.0 * PI).abs() < 1e-9);
        }
        let d = return_derivative_via_divergence(&rotation, &s, 1.0, &cfg()).unwrap();
        assert!((d.derivative - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_return_is_reported() {
        let f = |_: &[f64; 2]| [1.0, 0.0];
        let s = Section::segment("s", [0.0, 0.0], [0.0, 1.0], 1.0).unwrap();
        let b = return_map(&f, &s, &[0.0], &MapConfig::new(5.0, IntegratorConfig::default()));
        assert_eq!(b.outcomes[0].sample, Err(AtlasError::NoReturn { section: "s".into() }));
    }

    #[test]
    fn damped_oscillator_derivative() {
        let f = |p: &[f64; 2]| [-p[1], p[0] - 0.01 * p[1]];
        let s = ray("s", 0.0);
        let d = return_derivative_via_divergence(&f, &s, 1.0, &cfg()).unwrap();
        assert!((d.divergence_factor - (-0.01 * d.return_time).exp()).abs() < 1e-10);
        assert!(d.relative_disagreement() < 1e-6, "{d:?}");
        assert!((d.derivative - d.output / d.input).abs() < 1e-8);
    }

    #[test]
    fn limit_cycle_found_by_bisection() {
        let f = |p: &[f64; 2]| {
            let r = p[0].hypot(p[1]);
            let g = 1.0 - r;
            [-p[1] + p[0] * g, p[0] + p[1] * g]
        };
        let s = ray("s", 0.0);
        let inputs: Vec<f64> = (1..20).map(|k| 0.1 * k as f64).collect();
        let b = return_map(&f, &s, &inputs, &cfg());
        let br = b.fixed_point_brackets();
        assert_eq!(br.len(), 1);
        let u = return_fixed_point(&f, &s, br[0], &cfg()).unwrap();
        assert!((u - 1.0).abs() < 1e-8);

        let mid = ray("m", PI);
        let d = displacement_map(&f, &s, &s, &mid, &inputs, &cfg());
        let dbr = displacement_brackets(&d);
        assert_eq!(dbr.len(), 1);
        let z = displacement_zero(&f, &s, &s, &mid, dbr[0], &cfg()).unwrap();
        assert!((z - 1.0).abs() < 1e-8);
    }

    #[test]
    fn saddle_ratios() {
        let j = [[1.0, 0.0], [0.0, -2.0]];
        assert_eq!(saddle_from_jacobian([0.0, 0.0], j).unwrap().tau, 2.0);
        let s = saddle_from_jacobian([0.0, 0.0], [[3.0, 0.0], [0.0, -1.0]]).unwrap();
        assert!((s.tau - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(
            saddle_from_jacobian([0.0, 0.0], [[0.0, -1.0], [1.0, 0.0]]),
            Err(AtlasError::NotASaddle { .. })
        ));
        assert!(saddle_from_jacobian([0.0, 0.0], [[1.0, 0.0], [0.0, 2.0]]).is_err());
    }

    #[test]
    fn rescaled_saddle_matches_characteristic_roots() {
        use crate::blowup::{rescaled_field, RescalingParams};
        // μ̄ = (0, −1, 0.3) at a = −1/2 has the saddle (0, 1)
        let f = rescaled_field(&RescalingParams::new(-0.5, 0.0, -1.0, 0.3));
        let p = [0.0, 1.0];
        let s = hyperbolicity_ratio(&f, p).unwrap();
        let j = f.jacobian(p);
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let disc = (tr * tr - 4.0 * det).sqrt();
        let (l1, l2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
        assert!((s.lambda1 - l1).abs() < 1e-10 && (s.lambda2 + l2).abs() < 1e-10);
        assert!((s.tau - (-l2 / l1)).abs() < 1e-10);
    }

    fn saddle_sections() -> (Section<2>, Section<2>) {
        let entry = Section::segment("y=1", [0.0, 1.0], [1.0, 0.0], 2.0).unwrap();
        let exit = Section::segment("x=1", [1.0, 0.0], [0.0, 1.0], 2.0).unwrap();
        (entry, exit)
    }

    #[test]
    fn linear_saddle_dulac() {
        let (entry, exit) = saddle_sections();
        let cfg = relative_config(1e-12, 100.0);
        let f = |p: &[f64; 2]| [p[0], -2.0 * p[1]];
        let d = dulac_exponent_fit(&f, &entry, &exit, &default_dulac_ladder(), &cfg).unwrap();
        assert!((d.fit.exponent - 2.0).abs() < 1e-6, "{:?}", d.fit);
        assert!((d.fit.prefactor - 1.0).abs() < 1e-6);
        let f = |p: &[f64; 2]| [p[0], -p[1]];
        let d = dulac_exponent_fit(&f, &entry, &exit, &default_dulac_ladder(), &cfg).unwrap();
        assert!((d.fit.exponent - 1.0).abs() < 1e-6);
    }

    #[test]
    fn resonant_nonlinear_saddle() {
        let (entry, exit) = saddle_sections();
        let cfg = relative_config(1e-12, 100.0);
        let f = |p: &[f64; 2]| [p[0], -p[1] * (1.0 + p[0] * p[1])];
        let d = dulac_exponent_fit(&f, &entry, &exit, &log_ladder(-3.0, -6.0, 0.5), &cfg).unwrap();
        assert!((d.fit.exponent - 1.0).abs() < 5e-3, "{:?}", d.fit);
    }

    #[test]
    fn saddle_node_central_closed_form() {
        let cfg = relative_config(1e-12, 1e4);
        let data = saddle_node_central_eps(1.0, 0.0, &[1e-2, 1e-3], 1.0, &cfg).unwrap();
        for d in &data {
            let want = saddle_node_eps_closed_form(1.0, d.eta, 1.0);
            assert!(((d.eps - want) / want).abs() < 1e-6, "{d:?} vs {want}");
            assert!(d.linearity_defect < 1e-10);
        }
        assert_eq!(
            saddle_node_central_eps(1.0, 0.0, &[0.0], 1.0, &cfg),
            Err(AtlasError::NonpositiveEta(0.0))
        );
    }

    #[test]
    fn saddle_node_slope() {
        let cfg = relative_config(1e-12, 1e5);
        let data = saddle_node_central_eps(1.0, 0.0, &[1e-4, 7e-5, 5e-5], 1.0, &cfg).unwrap();
        let slope = eps_log_slope(&data).unwrap();
        assert!((slope + PI).abs() < 0.01 * PI, "{slope}");
    }

    #[test]
    fn flatness_examples() {
        let cfg = relative_config(1e-12, 1e4);
        let xs = [1.0, 1e-1, 1e-2];
        let r = stable_center_flatness(0.5, 0.0, 1.0, 1.0, &xs, &cfg).unwrap();
        assert_eq!(r.samples[0].output, Some(1.0));
        let y = r.samples[2].output.unwrap();
        let want = (-0.5f64 * (100.0 - 1.0)).exp();
        assert!(((y - want) / want).abs() < 1e-6);
        assert!(r.strictly_increasing, "{:?}", r.local_slopes);
    }

    #[test]
    fn nu_slope_at_lower_points() {
        for (a, label) in [(-0.5, PointLabel::P1), (-0.7, PointLabel::P2)] {
            let p = RescalingParams::new(a, 0.0, 0.0, 0.0);
            let cfg = relative_config(1e-12, 1e4);
            let fit = nu_dulac_slope(&p, label, 0.5, 0.5, 0.05, &[1e-3, 3e-4, 1e-4], &cfg).unwrap();
            assert!((fit.slope - fit.expected).abs() < 1e-2, "{fit:?}");
        }
    }

    #[test]
    fn power_fit_rejects_degenerate_input() {
        assert!(fit_power_law(&[(1.0, 1.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
        let f = fit_power_law(&[(1.0, 3.0), (2.0, 12.0), (4.0, 48.0)]).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12 && (f.prefactor - 3.0).abs() < 1e-12);
    }
}
