//! Planar polynomial vector fields with exact coefficients.

use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};
use crate::poly::{parse_rat, rat, rat_from_f64, rat_to_f64, CompiledPoly, Poly, Poly2, Poly3};

pub const SCHEMA_VERSION: u32 = 1;

/// Numeric view of a vector field in `R^D`.
pub trait VectorField<const D: usize>: Send + Sync {
    fn eval(&self, x: &[f64; D]) -> [f64; D];

    /// Trace of the Jacobian. The default uses central differences.
    fn divergence(&self, x: &[f64; D]) -> f64 {
        let mut div = 0.0;
        for k in 0..D {
            let h = 1e-6 * x[k].abs().max(1.0);
            let mut xp = *x;
            let mut xm = *x;
            xp[k] += h;
            xm[k] -= h;
            div += (self.eval(&xp)[k] - self.eval(&xm)[k]) / (2.0 * h);
        }
        div
    }
}

impl<const D: usize, F> VectorField<D> for F
where
    F: Fn(&[f64; D]) -> [f64; D] + Send + Sync,
{
    fn eval(&self, x: &[f64; D]) -> [f64; D] {
        self(x)
    }
}

/// The same field with time reversed.
#[derive(Clone, Copy, Debug)]
pub struct Reversed<'a, V: ?Sized>(pub &'a V);

impl<const D: usize, V: VectorField<D> + ?Sized> VectorField<D> for Reversed<'_, V> {
    fn eval(&self, x: &[f64; D]) -> [f64; D] {
        let mut v = self.0.eval(x);
        for c in &mut v {
            *c = -*c;
        }
        v
    }

    fn divergence(&self, x: &[f64; D]) -> f64 {
        -self.0.divergence(x)
    }
}

/// `P ∂x + Q ∂y` with exact rational coefficients.
#[derive(Clone, Debug)]
pub struct PolynomialField {
    px: Poly2,
    py: Poly2,
    compiled: [CompiledPoly<2>; 2],
    jac: [CompiledPoly<2>; 4],
    div: CompiledPoly<2>,
}

impl PartialEq for PolynomialField {
    fn eq(&self, other: &Self) -> bool {
        self.px == other.px && self.py == other.py
    }
}

impl Eq for PolynomialField {}

impl PolynomialField {
    pub fn new(px: Poly2, py: Poly2) -> Self {
        let jac = [
            px.derivative(0).compile(),
            px.derivative(1).compile(),
            py.derivative(0).compile(),
            py.derivative(1).compile(),
        ];
        let div = (px.derivative(0) + py.derivative(1)).compile();
        let compiled = [px.compile(), py.compile()];
        Self {
            px,
            py,
            compiled,
            jac,
            div,
        }
    }

    /// `(a x + b y, c x + d y)`.
    pub fn linear(a: BigRational, b: BigRational, c: BigRational, d: BigRational) -> Self {
        let x = Poly2::var(0);
        let y = Poly2::var(1);
        Self::new(x.scale(&a) + y.scale(&b), x.scale(&c) + y.scale(&d))
    }

    pub fn px(&self) -> &Poly2 {
        &self.px
    }

    pub fn py(&self) -> &Poly2 {
        &self.py
    }

    pub fn degree(&self) -> u32 {
        self.px.degree().max(self.py.degree())
    }

    pub fn eval_field(&self, p: [f64; 2]) -> [f64; 2] {
        [self.compiled[0].eval(&p), self.compiled[1].eval(&p)]
    }

    /// Exact symbolic divergence.
    pub fn divergence_poly(&self) -> Poly2 {
        self.px.derivative(0) + self.py.derivative(1)
    }

    pub fn jacobian(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        [
            [self.jac[0].eval(&p), self.jac[1].eval(&p)],
            [self.jac[2].eval(&p), self.jac[3].eval(&p)],
        ]
    }

    /// Lie derivative `P ∂g/∂x + Q ∂g/∂y`, exactly.
    pub fn lie_derivative(&self, g: &Poly2) -> Poly2 {
        &self.px * &g.derivative(0) + &self.py * &g.derivative(1)
    }

    pub fn reversed(&self) -> Self {
        Self::new(-self.px.clone(), -self.py.clone())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FieldRecord::from(self)).expect("field records always serialize")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let rec: FieldRecord = serde_json::from_value(v.clone()).map_err(|e| AtlasError::Parse(e.to_string()))?;
        rec.try_into()
    }
}

impl VectorField<2> for PolynomialField {
    fn eval(&self, x: &[f64; 2]) -> [f64; 2] {
        self.eval_field(*x)
    }

    fn divergence(&self, x: &[f64; 2]) -> f64 {
        self.div.eval(x)
    }
}

impl fmt::Display for PolynomialField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["x", "y"];
        write!(
            f,
            "x' = {}, y' = {}",
            self.px.display_with(&names),
            self.py.display_with(&names)
        )
    }
}

/// One monomial as `[i, j, "num", "den"]`.
type MonomialRecord = (u32, u32, String, String);

#[derive(Serialize, Deserialize)]
struct FieldRecord {
    schema_version: u32,
    px: Vec<MonomialRecord>,
    py: Vec<MonomialRecord>,
}

fn records(p: &Poly2) -> Vec<MonomialRecord> {
    p.terms()
        .map(|(e, c)| (e[0], e[1], c.numer().to_string(), c.denom().to_string()))
        .collect()
}

fn from_records(r: &[MonomialRecord]) -> Result<Poly2> {
    let mut p = Poly2::zero();
    for (i, j, n, d) in r {
        let q = parse_rat(&format!("{n}/{d}")).ok_or_else(|| AtlasError::Parse(format!("bad coefficient {n}/{d}")))?;
        p.add_term([*i, *j], q);
    }
    Ok(p)
}

impl From<&PolynomialField> for FieldRecord {
    fn from(f: &PolynomialField) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            px: records(&f.px),
            py: records(&f.py),
        }
    }
}

impl TryFrom<FieldRecord> for PolynomialField {
    type Error = AtlasError;

    fn try_from(r: FieldRecord) -> Result<Self> {
        if r.schema_version != SCHEMA_VERSION {
            return Err(AtlasError::Parse(format!(
                "unsupported schema_version {}",
                r.schema_version
            )));
        }
        Ok(PolynomialField::new(from_records(&r.px)?, from_records(&r.py)?))
    }
}

/// `(δ, γ, B)` of `x' = δx − y + Bx²`, `y' = x + γy + xy`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticParams {
    pub delta: BigRational,
    pub gamma: BigRational,
    pub b_cap: BigRational,
}

impl QuadraticParams {
    pub fn new(delta: BigRational, gamma: BigRational, b_cap: BigRational) -> Self {
        Self { delta, gamma, b_cap }
    }

    /// From doubles, each taken at its exact binary value.
    pub fn from_f64(delta: f64, gamma: f64, b_cap: f64) -> Self {
        Self::new(rat_from_f64(delta), rat_from_f64(gamma), rat_from_f64(b_cap))
    }

    pub fn delta_f64(&self) -> f64 {
        rat_to_f64(&self.delta)
    }

    pub fn gamma_f64(&self) -> f64 {
        rat_to_f64(&self.gamma)
    }

    pub fn b_f64(&self) -> f64 {
        rat_to_f64(&self.b_cap)
    }
}

pub fn quadratic_from_params(q: &QuadraticParams) -> PolynomialField {
    let one = rat(1, 1);
    let px = Poly2::from_terms([
        ([1, 0], q.delta.clone()),
        ([0, 1], -one.clone()),
        ([2, 0], q.b_cap.clone()),
    ]);
    let py = Poly2::from_terms([([1, 0], one.clone()), ([0, 1], q.gamma.clone()), ([1, 1], one)]);
    PolynomialField::new(px, py)
}

/// A polynomial vector field in `R^3`.
#[derive(Clone, Debug)]
pub struct Field3 {
    comps: [Poly3; 3],
    compiled: [CompiledPoly<3>; 3],
    jac: Vec<CompiledPoly<3>>,
}

impl PartialEq for Field3 {
    fn eq(&self, other: &Self) -> bool {
        self.comps == other.comps
    }
}

impl Field3 {
    pub fn new(comps: [Poly3; 3]) -> Self {
        let compiled = [comps[0].compile(), comps[1].compile(), comps[2].compile()];
        let jac = (0..9).map(|k| comps[k / 3].derivative(k % 3).compile()).collect();
        Self { comps, compiled, jac }
    }

    pub fn components(&self) -> &[Poly3; 3] {
        &self.comps
    }

    pub fn degree(&self) -> u32 {
        self.comps.iter().map(Poly::degree).max().unwrap_or(0)
    }

    pub fn jacobian(&self, p: [f64; 3]) -> [[f64; 3]; 3] {
        let mut j = [[0.0; 3]; 3];
        for (k, d) in self.jac.iter().enumerate() {
            j[k / 3][k % 3] = d.eval(&p);
        }
        j
    }

    pub fn divergence_poly(&self) -> Poly3 {
        (0..3).fold(Poly3::zero(), |acc, k| acc + self.comps[k].derivative(k))
    }

    pub fn lie_derivative(&self, g: &Poly3) -> Poly3 {
        (0..3).fold(Poly3::zero(), |acc, k| acc + &self.comps[k] * &g.derivative(k))
    }
}

impl VectorField<3> for Field3 {
    fn eval(&self, x: &[f64; 3]) -> [f64; 3] {
        [
            self.compiled[0].eval(x),
            self.compiled[1].eval(x),
            self.compiled[2].eval(x),
        ]
    }

    fn divergence(&self, x: &[f64; 3]) -> f64 {
        self.jac[0].eval(x) + self.jac[4].eval(x) + self.jac[8].eval(x)
    }
}
