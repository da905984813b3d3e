//! Adaptive explicit integration with dense output and section-crossing events.

mod dopri;
mod section;

pub use dopri::DenseSegment;
pub use section::{Crossing, Section};

use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};
use crate::field::{Reversed, VectorField, SCHEMA_VERSION};
use crate::quad::adaptive_lobatto;
use dopri::Stepper;
use section::Scanner;

pub const BLOWUP_BOUND: f64 = 1e8;
pub const UNDERFLOW_FACTOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h0: Option<f64>,
    pub hmax: f64,
    pub max_steps: usize,
    pub blowup_bound: f64,
    pub underflow_factor: f64,
    /// Disables error control and steps with this size.
    pub fixed_step: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h0: None,
            hmax: f64::INFINITY,
            max_steps: 2_000_000,
            blowup_bound: BLOWUP_BOUND,
            underflow_factor: UNDERFLOW_FACTOR,
            fixed_step: None,
        }
    }
}

impl IntegratorConfig {
    /// Mixed absolute/relative control with both set to `tol`.
    pub fn with_tol(tol: f64) -> Result<Self> {
        if !(1e-13..=1e-3).contains(&tol) {
            return Err(AtlasError::InvalidInput(format!(
                "tolerance {tol:e} outside [1e-13, 1e-3]"
            )));
        }
        Ok(Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        })
    }

    /// Pure relative control (absolute floor `atol`), for solutions that decay
    /// over many orders of magnitude.
    pub fn relative(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn fixed(h: f64) -> Self {
        Self {
            fixed_step: Some(h),
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventRecord<const D: usize> {
    pub time: f64,
    pub state: [f64; D],
    pub section_id: String,
}

/// A numerical trajectory: step nodes, per-step interpolants and events.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit<const D: usize> {
    pub times: Vec<f64>,
    pub states: Vec<[f64; D]>,
    pub segments: Vec<DenseSegment<D>>,
    pub events: Vec<EventRecord<D>>,
}

impl<const D: usize> Orbit<D> {
    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("orbits hold at least the initial node")
    }

    pub fn final_state(&self) -> [f64; D] {
        *self.states.last().expect("orbits hold at least the initial node")
    }

    /// Dense evaluation; `None` outside `[t0, t_end]`.
    pub fn eval(&self, t: f64) -> Option<[f64; D]> {
        let t0 = self.times[0];
        if t < t0 || t > self.t_end() {
            return None;
        }
        if self.segments.is_empty() {
            return Some(self.states[0]);
        }
        let k = self.segments.partition_point(|s| s.t1() < t);
        let seg = &self.segments[k.min(self.segments.len() - 1)];
        Some(seg.eval(t))
    }

    /// `t,<names...>` rows, one per step node.
    pub fn to_csv(&self, names: &[&str; D]) -> String {
        let mut out = String::from("t");
        for n in names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t:.17e}"));
            for v in s {
                out.push_str(&format!(",{v:.17e}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "times": self.times,
            "states": self.states.iter().map(|s| s.to_vec()).collect::<Vec<_>>(),
            "dense": self.segments.iter().map(|s| serde_json::json!({
                "t0": s.t0,
                "h": s.h,
                "coefficients": s.coefficients(),
            })).collect::<Vec<_>>(),
            "events": self.events.iter().map(|e| serde_json::json!({
                "time": e.time,
                "state": e.state.to_vec(),
                "section": e.section_id,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Integrates forward from `t = 0` to `tmax` with tolerance `tol`.
pub fn integrate<V, const D: usize>(f: &V, x0: [f64; D], tmax: f64, tol: f64) -> Result<Orbit<D>>
where
    V: VectorField<D> + ?Sized,
{
    integrate_with(f, x0, tmax, &IntegratorConfig::with_tol(tol)?, &[])
}

/// Integrates forward to `tmax`, recording every transversal crossing of the
/// given sections as an event.
pub fn integrate_with<V, const D: usize>(
    f: &V,
    x0: [f64; D],
    tmax: f64,
    cfg: &IntegratorConfig,
    sections: &[Section<D>],
) -> Result<Orbit<D>>
where
    V: VectorField<D> + ?Sized,
{
    if !(tmax > 0.0) || !tmax.is_finite() {
        return Err(AtlasError::InvalidInput(format!("tmax must be positive, got {tmax}")));
    }
    let mut st = Stepper::new(f, 0.0, x0, cfg)?;
    let mut scanners: Vec<Scanner<D>> = sections
        .iter()
        .map(|s| Scanner::new(s, &x0, &st.velocity(), 1.0))
        .collect();
    let mut orbit = Orbit {
        times: vec![0.0],
        states: vec![x0],
        segments: Vec::new(),
        events: Vec::new(),
    };
    while st.t < tmax {
        let seg = st.step(tmax)?;
        let mut hits = Vec::new();
        for sc in &mut scanners {
            for h in sc.scan(&seg, f, seg.t1()) {
                if !h.tangential {
                    hits.push(EventRecord {
                        time: h.t,
                        state: h.state,
                        section_id: sc.section.id.clone(),
                    });
                }
            }
        }
        hits.sort_by(|a, b| a.time.total_cmp(&b.time));
        orbit.events.extend(hits);
        orbit.times.push(st.t);
        orbit.states.push(st.y);
        orbit.segments.push(seg);
    }
    Ok(orbit)
}

/// Finds the first valid crossing of `s` from `x0` in direction `dir`.
///
/// The returned time is signed (negative for backward searches); the section's
/// orientation always refers to the original, forward-time field.
pub fn next_crossing<V, const D: usize>(
    f: &V,
    x0: [f64; D],
    s: &Section<D>,
    dir: Direction,
    tmax: f64,
    cfg: &IntegratorConfig,
) -> Result<Crossing<D>>
where
    V: VectorField<D> + ?Sized,
{
    crossing_with(f, x0, s, dir, tmax, cfg, |_, _| {})
}

/// Integrates in `dir` until `stop` holds at a step node or `|t|` reaches
/// `tmax`. Backward orbits are stored in reversed time, so times are always
/// nonnegative. The flag tells whether `stop` fired.
pub fn integrate_until<V, S, const D: usize>(
    f: &V,
    x0: [f64; D],
    dir: Direction,
    tmax: f64,
    cfg: &IntegratorConfig,
    stop: S,
) -> Result<(Orbit<D>, bool)>
where
    V: VectorField<D> + ?Sized,
    S: FnMut(&[f64; D]) -> bool,
{
    match dir {
        Direction::Forward => run_until(f, x0, tmax, cfg, stop),
        Direction::Backward => run_until(&Reversed(f), x0, tmax, cfg, stop),
    }
}

fn run_until<V, S, const D: usize>(
    f: &V,
    x0: [f64; D],
    tmax: f64,
    cfg: &IntegratorConfig,
    mut stop: S,
) -> Result<(Orbit<D>, bool)>
where
    V: VectorField<D> + ?Sized,
    S: FnMut(&[f64; D]) -> bool,
{
    if !(tmax > 0.0) {
        return Err(AtlasError::InvalidInput(format!("tmax must be positive, got {tmax}")));
    }
    let mut orbit = Orbit {
        times: vec![0.0],
        states: vec![x0],
        segments: Vec::new(),
        events: Vec::new(),
    };
    if stop(&x0) {
        return Ok((orbit, true));
    }
    let mut st = Stepper::new(f, 0.0, x0, cfg)?;
    while st.t < tmax {
        let seg = st.step(tmax)?;
        orbit.times.push(st.t);
        orbit.states.push(st.y);
        orbit.segments.push(seg);
        if stop(&st.y) {
            return Ok((orbit, true));
        }
    }
    Ok((orbit, false))
}

/// Integral of a scalar function along an orbit arc, with the exit crossing.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcIntegral<const D: usize> {
    pub value: f64,
    pub error_estimate: f64,
    pub crossing: Crossing<D>,
}

impl<const D: usize> ArcIntegral<D> {
    pub fn flight_time(&self) -> f64 {
        self.crossing.time.abs()
    }
}

/// Where an arc starts and stops: coordinate `coord` on `s_from`, flowing in
/// `dir` until the first valid crossing of `s_to`.
#[derive(Clone, Debug)]
pub struct OrbitSpec<'a, const D: usize> {
    pub s_from: &'a Section<D>,
    pub coord: f64,
    pub s_to: &'a Section<D>,
    pub dir: Direction,
}

/// `∫ g dt` over the arc described by `spec` (positive measure in either
/// direction; `g = 1` yields the flight time).
pub fn functional_along<V, G, const D: usize>(
    f: &V,
    spec: &OrbitSpec<'_, D>,
    g: G,
    tmax: f64,
    cfg: &IntegratorConfig,
) -> Result<ArcIntegral<D>>
where
    V: VectorField<D> + ?Sized,
    G: Fn(&[f64; D]) -> f64,
{
    integral_to_crossing(f, spec.s_from.point(spec.coord), spec.s_to, spec.dir, tmax, cfg, g)
}

/// As [`functional_along`] but starting from an arbitrary state.
pub fn integral_to_crossing<V, G, const D: usize>(
    f: &V,
    x0: [f64; D],
    s_to: &Section<D>,
    dir: Direction,
    tmax: f64,
    cfg: &IntegratorConfig,
    g: G,
) -> Result<ArcIntegral<D>>
where
    V: VectorField<D> + ?Sized,
    G: Fn(&[f64; D]) -> f64,
{
    let mut value = 0.0;
    let mut err = 0.0;
    let crossing = crossing_with(f, x0, s_to, dir, tmax, cfg, |seg, t_stop| {
        let scale = g(&seg.start()).abs().max(1.0);
        let tol = cfg.rtol.max(1e-15) * (t_stop - seg.t0) * scale;
        let mut h = |t: f64| g(&seg.eval(t));
        let (v, e) = adaptive_lobatto(&mut h, seg.t0, t_stop, tol, 8);
        value += v;
        err += e;
    })?;
    Ok(ArcIntegral {
        value,
        error_estimate: err,
        crossing,
    })
}

fn crossing_with<V, CB, const D: usize>(
    f: &V,
    x0: [f64; D],
    s: &Section<D>,
    dir: Direction,
    tmax: f64,
    cfg: &IntegratorConfig,
    on_segment: CB,
) -> Result<Crossing<D>>
where
    V: VectorField<D> + ?Sized,
    CB: FnMut(&DenseSegment<D>, f64),
{
    match dir {
        Direction::Forward => search(f, x0, s, 1.0, tmax, cfg, on_segment),
        Direction::Backward => search(&Reversed(f), x0, s, -1.0, tmax, cfg, on_segment),
    }
}

fn search<V, CB, const D: usize>(
    f: &V,
    x0: [f64; D],
    s: &Section<D>,
    dir_sign: f64,
    tmax: f64,
    cfg: &IntegratorConfig,
    mut on_segment: CB,
) -> Result<Crossing<D>>
where
    V: VectorField<D> + ?Sized,
    CB: FnMut(&DenseSegment<D>, f64),
{
    if !(tmax > 0.0) {
        return Err(AtlasError::InvalidInput(format!("tmax must be positive, got {tmax}")));
    }
    let mut st = Stepper::new(f, 0.0, x0, cfg)?;
    let mut sc = Scanner::new(s, &x0, &st.velocity(), dir_sign);
    while st.t < tmax {
        let seg = st.step(tmax)?;
        if let Some(hit) = sc.scan(&seg, f, seg.t1()).into_iter().next() {
            if hit.tangential {
                return Err(AtlasError::TangentialCrossing {
                    section: s.id.clone(),
                    vn: hit.vn * dir_sign,
                });
            }
            on_segment(&seg, hit.t);
            return Ok(Crossing {
                time: dir_sign * hit.t,
                state: hit.state,
                coord: s.coord(&hit.state),
                normal_velocity: hit.vn * dir_sign,
            });
        }
        on_segment(&seg, seg.t1());
    }
    Err(AtlasError::NoCrossing {
        section: s.id.clone(),
        tmax,
    })
}
