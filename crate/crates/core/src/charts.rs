//! Localization at the point at infinity on the y-axis, normal-form
//! parameters, and classification of finite singular points.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};
use crate::field::{PolynomialField, QuadraticParams};
use crate::poly::{rat, rat_to_f64, resultant_x, resultant_y, Poly, Poly2, UPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartId {
    /// `v = x/y`, `z = 1/y`.
    YDirection,
}

/// The field in chart coordinates `(v, z)`, after multiplying by `z^(d-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InfinityChart {
    pub field: PolynomialField,
    pub chart_id: ChartId,
}

/// Coefficients of a quadratic `P = Σ δ_ij x^i y^j`, `Q = Σ γ_ij x^i y^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticCoefficients {
    pub delta: [[BigRational; 3]; 3],
    pub gamma: [[BigRational; 3]; 3],
}

impl QuadraticCoefficients {
    pub fn of(f: &PolynomialField) -> Result<Self> {
        if f.degree() > 2 {
            return Err(AtlasError::InvalidInput(format!(
                "expected a quadratic field, got degree {}",
                f.degree()
            )));
        }
        let grab = |p: &Poly2| -> [[BigRational; 3]; 3] {
            std::array::from_fn(|i| std::array::from_fn(|j| p.coeff(&[i as u32, j as u32])))
        };
        Ok(Self {
            delta: grab(f.px()),
            gamma: grab(f.py()),
        })
    }

    /// `γ11 (δ20 − γ11)`: nonzero exactly when the nilpotent point is triple.
    pub fn triple_condition(&self) -> BigRational {
        let g11 = &self.gamma[1][1];
        g11 * (&self.delta[2][0] - g11)
    }
}

/// Chart `v = x/y`, `z = 1/y` with time rescaled by `z^(d-1)`:
/// `v' = P* − v Q*`, `z' = −z Q*` where `P*(v, z) = z^d P(v/z, 1/z)`.
pub fn chart_at_infinity(f: &PolynomialField) -> InfinityChart {
    let d = f.degree();
    let star = |p: &Poly2| -> Poly2 { Poly2::from_terms(p.terms().map(|(e, c)| ([e[0], d - e[0] - e[1]], c.clone()))) };
    let ps = star(f.px());
    let qs = star(f.py());
    let v = Poly2::var(0);
    let z = Poly2::var(1);
    let vdot = &ps - &(&v * &qs);
    let zdot = -(&z * &qs);
    InfinityChart {
        field: PolynomialField::new(vdot, zdot),
        chart_id: ChartId::YDirection,
    }
}

/// Localizes a quadratic field at the infinite singular point on the y-axis,
/// requiring a nonzero nilpotent linear part there.
pub fn localize_at_infinity(f: &PolynomialField) -> Result<InfinityChart> {
    let c = QuadraticCoefficients::of(f)?;
    let chart = chart_at_infinity(f);
    if !c.delta[0][2].is_zero() {
        return Err(AtlasError::NotNilpotentAtInfinity {
            detail: format!("chart origin is not singular (delta02 = {})", c.delta[0][2]),
        });
    }
    let lin = linear_part(&chart.field);
    let tr = &lin[0][0] + &lin[1][1];
    let det = &lin[0][0] * &lin[1][1] - &lin[0][1] * &lin[1][0];
    let nonzero = lin.iter().flatten().any(|x| !x.is_zero());
    if !(tr.is_zero() && det.is_zero() && nonzero) {
        return Err(AtlasError::NotNilpotentAtInfinity {
            detail: format!(
                "delta11 = {}, gamma02 = {}, delta01 = {}; linear part [[{}, {}], [{}, {}]]",
                c.delta[1][1], c.gamma[0][2], c.delta[0][1], lin[0][0], lin[0][1], lin[1][0], lin[1][1]
            ),
        });
    }
    Ok(chart)
}

fn linear_part(f: &PolynomialField) -> [[BigRational; 2]; 2] {
    [
        [f.px().coeff(&[1, 0]), f.px().coeff(&[0, 1])],
        [f.py().coeff(&[1, 0]), f.py().coeff(&[0, 1])],
    ]
}

const SERIES_ORDER: u32 = 12;

impl InfinityChart {
    /// Multiplicity of the nilpotent origin: the order in `v` of `z'` along
    /// the curve `v' = 0`, solved as `z = φ(v)`. `None` when `z'` vanishes
    /// identically along it to the working order (non-isolated).
    pub fn multiplicity(&self) -> Option<u32> {
        let vdot = self.field.px();
        let zdot = self.field.py();
        let c = vdot.coeff(&[0, 1]);
        if c.is_zero() {
            return None;
        }
        // z = −(v' − c z)/c, iterated; each pass fixes at least one more order.
        let rest = vdot - &Poly2::monomial([0, 1], c.clone());
        let t = Poly::<1>::var(0);
        let mut phi = Poly::<1>::zero();
        for _ in 0..=SERIES_ORDER {
            let next = rest.compose(&[t.clone(), phi.clone()]).truncate(SERIES_ORDER);
            phi = next.scale(&-c.recip());
        }
        zdot.compose(&[t, phi]).truncate(SERIES_ORDER).order()
    }

    pub fn is_triple(&self) -> bool {
        self.multiplicity() == Some(3)
    }

    /// Jet of `Z'` in the Liénard coordinates `V = −v`, `Z = V'`, truncated
    /// at total degree `order`.
    pub fn lienard_jet(&self, order: u32) -> Result<Poly2> {
        let fv = self.field.px();
        let gz = self.field.py();
        let c = fv.coeff(&[0, 1]);
        if c.is_zero() {
            return Err(AtlasError::InvalidInput("v' has no linear z term".into()));
        }
        let big_v = Poly2::var(0);
        let big_z = Poly2::var(1);
        let minus_v = -big_v.clone();
        // Solve Z = −F(−V, z) for z = ψ(V, Z).
        let rest = fv - &Poly2::monomial([0, 1], c.clone());
        let mut psi = Poly2::zero();
        for _ in 0..=order + 1 {
            let r = rest.compose(&[minus_v.clone(), psi.clone()]).truncate(order + 1);
            psi = (-(big_z.clone() + r)).scale(&c.recip());
        }
        let subs = [minus_v, psi];
        let fv_v = fv.derivative(0).compose(&subs);
        let fv_z = fv.derivative(1).compose(&subs);
        let g = gz.compose(&subs);
        // Z' = −(F_v F + F_z G) with F = −Z.
        let zp = &big_z * &fv_v - &fv_z * &g;
        Ok(zp.truncate(order))
    }
}

/// `(a, b, η)` of the cubic saddle normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalFormParams {
    pub a: BigRational,
    pub b: BigRational,
    pub eta: BigRational,
}

impl NormalFormParams {
    pub fn a_f64(&self) -> f64 {
        rat_to_f64(&self.a)
    }

    pub fn b_f64(&self) -> f64 {
        rat_to_f64(&self.b)
    }

    pub fn eta_f64(&self) -> f64 {
        rat_to_f64(&self.eta)
    }
}

/// `a = 1 − B`, `b = 3 − 2B`, `η = −γ (B − 1)² (5B² − 4B + 11)`; saddle type
/// needs `B > 1`.
pub fn normal_form_params(q: &QuadraticParams) -> Result<NormalFormParams> {
    let b_cap = &q.b_cap;
    let one = BigRational::one();
    if *b_cap <= one {
        return Err(AtlasError::NotSaddleType { b: q.b_f64() });
    }
    let bm1 = b_cap - &one;
    let quad = rat(5, 1) * b_cap * b_cap - rat(4, 1) * b_cap + rat(11, 1);
    Ok(NormalFormParams {
        a: &one - b_cap,
        b: rat(3, 1) - rat(2, 1) * b_cap,
        eta: -(&q.gamma * &bm1 * &bm1 * quad),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularKind {
    Saddle,
    Node,
    FocusOrCenter,
    SaddleNode,
    Nilpotent,
    Degenerate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingularPoint {
    pub point: [f64; 2],
    pub kind: SingularKind,
    pub trace: f64,
    pub det: f64,
    pub eigenvalues: [Complex64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Default for BBox {
    fn default() -> Self {
        Self::square(10.0)
    }
}

impl BBox {
    pub fn square(r: f64) -> Self {
        Self {
            xmin: -r,
            xmax: r,
            ymin: -r,
            ymax: r,
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (self.xmin..=self.xmax).contains(&p[0]) && (self.ymin..=self.ymax).contains(&p[1])
    }
}

/// Trace/determinant classification of a linear part.
pub fn classify_linear(j: [[f64; 2]; 2]) -> (SingularKind, f64, f64, [Complex64; 2]) {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    let sq = Complex64::new(disc, 0.0).sqrt();
    let eig = [(tr - sq) / 2.0, (tr + sq) / 2.0];
    let scale = j.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let eps = 1e-10 * scale.max(1.0);
    let kind = if scale <= 1e-12 {
        SingularKind::Degenerate
    } else if det.abs() <= eps * scale.max(1.0) {
        if tr.abs() > eps {
            SingularKind::SaddleNode
        } else {
            SingularKind::Nilpotent
        }
    } else if det < 0.0 {
        SingularKind::Saddle
    } else if tr.abs() <= eps || disc < 0.0 {
        SingularKind::FocusOrCenter
    } else {
        SingularKind::Node
    };
    (kind, tr, det, eig)
}

/// All real singular points inside `bbox`.
pub fn classify_finite_singularities(f: &PolynomialField, bbox: &BBox) -> Result<Vec<SingularPoint>> {
    let (px, py) = (f.px(), f.py());
    if px.is_zero() || py.is_zero() {
        return Err(AtlasError::NonIsolatedSingularities {
            factor: "a component vanishes identically".into(),
        });
    }
    let rx = resultant_y(px, py);
    let ry = resultant_x(px, py);
    if rx.is_zero() || ry.is_zero() {
        return Err(AtlasError::NonIsolatedSingularities {
            factor: "the components share a nonconstant factor".into(),
        });
    }
    let margin = 1e-9;
    let xs = candidates(&rx, bbox.xmin - margin, bbox.xmax + margin);
    let ys = candidates(&ry, bbox.ymin - margin, bbox.ymax + margin);
    let mut found: Vec<[f64; 2]> = Vec::new();
    for &x in &xs {
        for &y in &ys {
            let Some(p) = polish(f, [x, y]) else { continue };
            if !bbox.contains(p) {
                continue;
            }
            if found.iter().any(|q| (q[0] - p[0]).hypot(q[1] - p[1]) < 1e-7) {
                continue;
            }
            found.push(p);
        }
    }
    found.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Ok(found
        .into_iter()
        .map(|p| {
            let (kind, trace, det, eigenvalues) = classify_linear(f.jacobian(p));
            SingularPoint {
                point: p,
                kind,
                trace,
                det,
                eigenvalues,
            }
        })
        .collect())
}

fn candidates(r: &UPoly, lo: f64, hi: f64) -> Vec<f64> {
    if r.degree() == Some(0) {
        return Vec::new();
    }
    r.real_roots_in(lo, hi, 1e-14)
}

/// Newton refinement; `None` if the pair is not a common zero.
fn polish(f: &PolynomialField, mut p: [f64; 2]) -> Option<[f64; 2]> {
    let start = p;
    let scale = 1.0 + p[0].abs().max(p[1].abs());
    for _ in 0..30 {
        let v = f.eval_field(p);
        let j = f.jacobian(p);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let dx = (v[0] * j[1][1] - v[1] * j[0][1]) / det;
        let dy = (j[0][0] * v[1] - j[1][0] * v[0]) / det;
        p = [p[0] - dx, p[1] - dy];
        if dx.abs().max(dy.abs()) < 1e-16 * scale {
            break;
        }
    }
    let v = f.eval_field(p);
    let fscale = 1.0 + f.px().max_abs_coeff().max(f.py().max_abs_coeff()) * scale * scale;
    let near = (p[0] - start[0]).hypot(p[1] - start[1]) < 1e-5 * scale;
    if near && v[0].abs().max(v[1].abs()) < 1e-9 * fscale {
        Some(p)
    } else {
        None
    }
}

/// Sign helper kept exact for classification of rational linear parts.
pub fn exact_linear_kind(j: [[BigRational; 2]; 2]) -> SingularKind {
    let tr = &j[0][0] + &j[1][1];
    let det = &j[0][0] * &j[1][1] - &j[0][1] * &j[1][0];
    let zero = j.iter().flatten().all(|x| x.is_zero());
    if zero {
        SingularKind::Degenerate
    } else if det.is_zero() {
        if tr.is_zero() {
            SingularKind::Nilpotent
        } else {
            SingularKind::SaddleNode
        }
    } else if det.is_negative() {
        SingularKind::Saddle
    } else if tr.is_zero() || (&tr * &tr - rat(4, 1) * &det).is_negative() {
        SingularKind::FocusOrCenter
    } else {
        SingularKind::Node
    }
}
