use crate::error::{AtlasError, Result};
use crate::field::VectorField;

use super::DenseSegment;

/// A transversal segment (hyperplane patch) parameterized by arclength along
/// `tangent` from `anchor`.
#[derive(Clone, Debug, PartialEq)]
pub struct Section<const D: usize> {
    pub id: String,
    pub anchor: [f64; D],
    pub normal: [f64; D],
    pub tangent: [f64; D],
    pub halfwidth: f64,
    /// `+1`: only crossings along `normal`; `-1`: only against it; `0`: both.
    pub orientation: i8,
}

fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit<const D: usize>(v: [f64; D]) -> Result<[f64; D]> {
    let n = dot(&v, &v).sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(AtlasError::InvalidInput("section direction must be nonzero".into()));
    }
    Ok(v.map(|x| x / n))
}

impl<const D: usize> Section<D> {
    pub fn new(
        id: impl Into<String>,
        anchor: [f64; D],
        normal: [f64; D],
        tangent: [f64; D],
        halfwidth: f64,
    ) -> Result<Self> {
        if !(halfwidth > 0.0) {
            return Err(AtlasError::InvalidInput(format!(
                "section halfwidth must be positive, got {halfwidth}"
            )));
        }
        let normal = unit(normal)?;
        let tangent = unit(tangent)?;
        if dot(&normal, &tangent).abs() > 1e-12 {
            return Err(AtlasError::InvalidInput(
                "section tangent is not orthogonal to its normal".into(),
            ));
        }
        Ok(Self {
            id: id.into(),
            anchor,
            normal,
            tangent,
            halfwidth,
            orientation: 0,
        })
    }

    pub fn with_orientation(mut self, orientation: i8) -> Self {
        self.orientation = orientation.signum();
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn signed_distance(&self, x: &[f64; D]) -> f64 {
        let d: [f64; D] = std::array::from_fn(|i| x[i] - self.anchor[i]);
        dot(&self.normal, &d)
    }

    /// Arclength coordinate of the projection of `x` onto the section line.
    pub fn coord(&self, x: &[f64; D]) -> f64 {
        let d: [f64; D] = std::array::from_fn(|i| x[i] - self.anchor[i]);
        dot(&self.tangent, &d)
    }

    pub fn point(&self, s: f64) -> [f64; D] {
        std::array::from_fn(|i| self.anchor[i] + s * self.tangent[i])
    }

    /// Distance from the section's line measured inside the hyperplane, used
    /// for the extent check in dimension three.
    fn off_line(&self, x: &[f64; D]) -> f64 {
        let d: [f64; D] = std::array::from_fn(|i| x[i] - self.anchor[i]);
        let n = dot(&self.normal, &d);
        let t = dot(&self.tangent, &d);
        let r2 = dot(&d, &d) - n * n - t * t;
        r2.max(0.0).sqrt()
    }

    pub fn contains_projection(&self, x: &[f64; D]) -> bool {
        self.coord(x).abs() <= self.halfwidth && self.off_line(x) <= self.halfwidth
    }
}

impl Section<2> {
    /// Segment through `anchor` along `tangent`; the normal is the tangent
    /// rotated by +90 degrees.
    pub fn segment(id: impl Into<String>, anchor: [f64; 2], tangent: [f64; 2], halfwidth: f64) -> Result<Self> {
        let t = unit(tangent)?;
        Self::new(id, anchor, [-t[1], t[0]], t, halfwidth)
    }
}

/// A located section crossing. `time` is signed by the search direction;
/// `normal_velocity` is taken in the forward-time field.
#[derive(Clone, Debug, PartialEq)]
pub struct Crossing<const D: usize> {
    pub time: f64,
    pub state: [f64; D],
    pub coord: f64,
    pub normal_velocity: f64,
}

pub(crate) struct Hit<const D: usize> {
    pub t: f64,
    pub state: [f64; D],
    /// Normal velocity in the traversal field.
    pub vn: f64,
    pub tangential: bool,
}

const SAMPLES: usize = 4;
const START_EPS: f64 = 1e-12;
pub(crate) const TANGENTIAL_VN: f64 = 1e-10;

pub(crate) struct Scanner<'s, const D: usize> {
    pub section: &'s Section<D>,
    orient: f64,
    prev: f64,
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl<'s, const D: usize> Scanner<'s, D> {
    /// `v0` is the traversal velocity at `x0`; `dir_sign` is −1 when the
    /// traversal field is the time reversal of the original.
    pub fn new(section: &'s Section<D>, x0: &[f64; D], v0: &[f64; D], dir_sign: f64) -> Self {
        let g0 = section.signed_distance(x0);
        let scale = 1.0 + x0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // Starting on the section counts as already being on the outgoing side.
        let prev = if g0.abs() <= START_EPS * scale {
            sgn(dot(&section.normal, v0))
        } else {
            sgn(g0)
        };
        Self {
            section,
            orient: f64::from(section.orientation) * dir_sign,
            prev,
        }
    }

    /// All crossings inside `[seg.t0, t_stop]` that pass the extent and
    /// orientation filters. Tangential ones are returned flagged.
    pub fn scan<V>(&mut self, seg: &DenseSegment<D>, f: &V, t_stop: f64) -> Vec<Hit<D>>
    where
        V: VectorField<D> + ?Sized,
    {
        let s = self.section;
        let g = |t: f64| s.signed_distance(&seg.eval(t));
        let mut hits = Vec::new();
        let mut ta = seg.t0;
        for k in 1..=SAMPLES {
            let tb = if k == SAMPLES {
                t_stop
            } else {
                seg.t0 + (t_stop - seg.t0) * k as f64 / SAMPLES as f64
            };
            let gb = g(tb);
            let sb = sgn(gb);
            if self.prev == 0.0 {
                self.prev = sb;
            } else if sb != self.prev {
                let t = if gb == 0.0 { tb } else { brent(&g, ta, tb, g(ta), gb) };
                let state = seg.eval(t);
                let v = f.eval(&state);
                let vn = dot(&s.normal, &v);
                let speed = dot(&v, &v).sqrt();
                self.prev = if sb != 0.0 { sb } else { -self.prev };
                if s.contains_projection(&state) {
                    let tangential = vn.abs() < TANGENTIAL_VN * speed.max(1.0);
                    if tangential || self.orient == 0.0 || sgn(vn) == self.orient {
                        hits.push(Hit {
                            t,
                            state,
                            vn,
                            tangential,
                        });
                    }
                }
            }
            ta = tb;
        }
        hits
    }
}

/// Brent's root finder on a bracketing interval.
fn brent<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 1e-300;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b);
    }
    b
}
