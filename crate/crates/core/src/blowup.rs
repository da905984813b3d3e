//! Weighted blow-up of the three-parameter unfolding
//! `x' = y + a x² + μ2`, `y' = μ1 + μ3 y + x y`, `ν' = 0`
//! with `(x, y, ν) = (r x̄, r² ȳ, r ρ)` and `(μ1, μ2, μ3) = (ν³μ̄1, ν²μ̄2, νμ̄3)`.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{AtlasError, Result};
use crate::field::{Field3, PolynomialField};
use crate::poly::{rat, rat_from_f64, Poly, Poly2, Poly3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupPoint {
    pub r: f64,
    pub xbar: f64,
    pub ybar: f64,
    pub rho: f64,
}

impl BlowupPoint {
    /// `(x, y, ν) = (r x̄, r² ȳ, r ρ)`.
    pub fn blowdown(&self) -> [f64; 3] {
        let r = self.r;
        [r * self.xbar, r * r * self.ybar, r * self.rho]
    }

    /// Inverse of [`blowdown`](Self::blowdown) onto the sphere
    /// `x̄² + ȳ² + ρ² = 1`. `None` at the origin or for `ν < 0`.
    pub fn blowup_normalized(x: f64, y: f64, nu: f64) -> Option<Self> {
        if nu < 0.0 {
            return None;
        }
        let s = x * x + nu * nu;
        let r2 = 0.5 * (s + (s * s + 4.0 * y * y).sqrt());
        if !(r2 > 0.0) {
            return None;
        }
        let r = r2.sqrt();
        Some(Self {
            r,
            xbar: x / r,
            ybar: y / r2,
            rho: nu / r,
        })
    }

    pub fn sphere_residual(&self) -> f64 {
        self.xbar * self.xbar + self.ybar * self.ybar + self.rho * self.rho - 1.0
    }
}

/// Parameters of the rescaled family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescalingParams {
    pub a: f64,
    pub mu1bar: f64,
    pub mu2bar: f64,
    pub mu3bar: f64,
    /// Fourth unfolding parameter; carried along, never used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

impl RescalingParams {
    pub fn new(a: f64, mu1bar: f64, mu2bar: f64, mu3bar: f64) -> Self {
        Self {
            a,
            mu1bar,
            mu2bar,
            mu3bar,
            mu: None,
        }
    }

    /// Point `(0, cos θ, sin θ)` of the slice `μ̄1 = 0` of the unit sphere.
    pub fn on_mu1_slice(a: f64, theta: f64) -> Self {
        Self::new(a, 0.0, theta.cos(), theta.sin())
    }

    pub fn from_unfolding(a: f64, mu1: f64, mu2: f64, mu3: f64, nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(AtlasError::NonpositiveArgument(nu));
        }
        Ok(Self::new(a, mu1 / nu.powi(3), mu2 / (nu * nu), mu3 / nu))
    }

    pub fn unfolding(&self, nu: f64) -> [f64; 3] {
        [nu.powi(3) * self.mu1bar, nu * nu * self.mu2bar, nu * self.mu3bar]
    }

    pub fn mu_bar(&self) -> [f64; 3] {
        [self.mu1bar, self.mu2bar, self.mu3bar]
    }

    pub fn sphere_norm(&self) -> f64 {
        (self.mu1bar.powi(2) + self.mu2bar.powi(2) + self.mu3bar.powi(2)).sqrt()
    }

    /// Moves `μ̄` to the unit sphere along its weighted orbit
    /// `(k³μ̄1, k²μ̄2, kμ̄3)`, so the unfolding is unchanged with `ν ↦ ν/k`.
    /// Returns the normalized parameters and `k`. `None` when `μ̄ = 0`.
    pub fn normalized(&self) -> Option<(Self, f64)> {
        let m = self.mu_bar();
        if m.iter().all(|v| *v == 0.0) {
            return None;
        }
        let g = |k: f64| (m[0] * k.powi(3)).powi(2) + (m[1] * k * k).powi(2) + (m[2] * k).powi(2) - 1.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        while g(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let k = 0.5 * (lo + hi);
        let out = Self {
            a: self.a,
            mu1bar: m[0] * k.powi(3),
            mu2bar: m[1] * k * k,
            mu3bar: m[2] * k,
            mu: self.mu,
        };
        Some((out, k))
    }
}

/// `x̄' = ȳ + a x̄² + μ̄2`, `ȳ' = μ̄1 + μ̄3 ȳ + x̄ ȳ`.
pub fn rescaled_field(p: &RescalingParams) -> PolynomialField {
    rescaled_field_exact(
        &rat_from_f64(p.a),
        &rat_from_f64(p.mu1bar),
        &rat_from_f64(p.mu2bar),
        &rat_from_f64(p.mu3bar),
    )
}

pub fn rescaled_field_exact(a: &BigRational, m1: &BigRational, m2: &BigRational, m3: &BigRational) -> PolynomialField {
    let mut px = Poly2::zero();
    px.add_term([0, 1], BigRational::one());
    px.add_term([2, 0], a.clone());
    px.add_term([0, 0], m2.clone());
    let mut py = Poly2::zero();
    py.add_term([0, 0], m1.clone());
    py.add_term([0, 1], m3.clone());
    py.add_term([1, 1], BigRational::one());
    PolynomialField::new(px, py)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PointLabel {
    P1,
    P2,
    P3,
    P4,
}

impl fmt::Display for PointLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PointLabel::P1 => "P1",
            PointLabel::P2 => "P2",
            PointLabel::P3 => "P3",
            PointLabel::P4 => "P4",
        };
        f.write_str(s)
    }
}

/// A singular point on `r = ρ = 0`, located in the directional chart `x̄ = ±1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub label: PointLabel,
    pub chart: BlowupChart,
    pub ybar: f64,
    /// In `(r, ρ, ȳ)` order.
    pub eigenvalues: [f64; 3],
}

impl CriticalPoint {
    pub fn chart_state(&self) -> [f64; 3] {
        [0.0, 0.0, self.ybar]
    }

    /// Hyperbolicity ratio inside the disc `r = 0`: |λ_ȳ / λ_ρ|.
    pub fn ratio_in_disc(&self) -> f64 {
        (self.eigenvalues[2] / self.eigenvalues[1]).abs()
    }
}

pub fn critical_points(a: f64) -> Result<Vec<CriticalPoint>> {
    if a == 0.5 {
        return Err(AtlasError::DegenerateBlowup);
    }
    let b = 1.0 - 2.0 * a;
    let top = b / 2.0;
    Ok(vec![
        CriticalPoint {
            label: PointLabel::P1,
            chart: BlowupChart::XMinus,
            ybar: 0.0,
            eigenvalues: [-a, a, -b],
        },
        CriticalPoint {
            label: PointLabel::P2,
            chart: BlowupChart::XPlus,
            ybar: 0.0,
            eigenvalues: [a, -a, b],
        },
        CriticalPoint {
            label: PointLabel::P3,
            chart: BlowupChart::XPlus,
            ybar: top,
            eigenvalues: [0.5, -0.5, -b],
        },
        CriticalPoint {
            label: PointLabel::P4,
            chart: BlowupChart::XMinus,
            ybar: top,
            eigenvalues: [-0.5, 0.5, b],
        },
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowupChart {
    /// `ρ = 1`; state `(r, x̄, ȳ)`.
    Rescaling,
    /// `x̄ = +1`; state `(r, ρ, ȳ)`.
    XPlus,
    /// `x̄ = −1`; state `(r, ρ, ȳ)`.
    XMinus,
    /// `ȳ = +1`; state `(r, ρ, x̄)`.
    YPlus,
    /// `ȳ = −1`; state `(r, ρ, x̄)`.
    YMinus,
}

impl BlowupChart {
    pub const ALL: [BlowupChart; 5] = [
        BlowupChart::Rescaling,
        BlowupChart::XPlus,
        BlowupChart::XMinus,
        BlowupChart::YPlus,
        BlowupChart::YMinus,
    ];

    pub fn state_names(self) -> [&'static str; 3] {
        match self {
            BlowupChart::Rescaling => ["r", "xbar", "ybar"],
            BlowupChart::XPlus | BlowupChart::XMinus => ["r", "rho", "ybar"],
            BlowupChart::YPlus | BlowupChart::YMinus => ["r", "rho", "xbar"],
        }
    }

    /// `ν = rρ` written in the chart's coordinates.
    pub fn nu(self) -> Poly3 {
        match self {
            BlowupChart::Rescaling => Poly3::var(0),
            _ => &Poly3::var(0) * &Poly3::var(1),
        }
    }

    fn sign(self) -> i64 {
        match self {
            BlowupChart::XMinus | BlowupChart::YMinus => -1,
            _ => 1,
        }
    }
}

impl fmt::Display for BlowupChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BlowupChart::Rescaling => "rescaling",
            BlowupChart::XPlus => "x+",
            BlowupChart::XMinus => "x-",
            BlowupChart::YPlus => "y+",
            BlowupChart::YMinus => "y-",
        };
        f.write_str(s)
    }
}

impl FromStr for BlowupChart {
    type Err = AtlasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rescaling" | "rho=1" => Ok(BlowupChart::Rescaling),
            "x+" | "xbar=+1" | "xbar=1" => Ok(BlowupChart::XPlus),
            "x-" | "xbar=-1" => Ok(BlowupChart::XMinus),
            "y+" | "ybar=+1" | "ybar=1" => Ok(BlowupChart::YPlus),
            "y-" | "ybar=-1" => Ok(BlowupChart::YMinus),
            other => Err(AtlasError::UnknownChart(other.to_string())),
        }
    }
}

/// The blown-up model field (after division by `r`) in one chart.
pub fn blown_up_field_3d(p: &RescalingParams, chart: BlowupChart) -> Field3 {
    let a = rat_from_f64(p.a);
    let m = [rat_from_f64(p.mu1bar), rat_from_f64(p.mu2bar), rat_from_f64(p.mu3bar)];
    blown_up_field_exact(&a, &m, chart)
}

/// As [`blown_up_field_3d`] with the chart given by name.
pub fn blown_up_field_named(p: &RescalingParams, chart: &str) -> Result<Field3> {
    Ok(blown_up_field_3d(p, chart.parse()?))
}

pub fn blown_up_field_exact(a: &BigRational, m: &[BigRational; 3], chart: BlowupChart) -> Field3 {
    let c = |q: &BigRational| Poly3::constant(q.clone());
    let k = |n: i64, d: i64| Poly3::constant(rat(n, d));
    let r = Poly3::var(0);
    match chart {
        BlowupChart::Rescaling => {
            let (x, y) = (Poly3::var(1), Poly3::var(2));
            let fx = &y + &(&c(a) * &x.pow(2)) + c(&m[1]);
            let fy = c(&m[0]) + &c(&m[2]) * &y + &x * &y;
            Field3::new([Poly3::zero(), fx, fy])
        }
        BlowupChart::XPlus | BlowupChart::XMinus => {
            let s = k(chart.sign(), 1);
            let (rho, y) = (Poly3::var(1), Poly3::var(2));
            let e = &y + &c(a) + &rho.pow(2) * &c(&m[1]);
            let se = &s * &e;
            let fr = &r * &se;
            let frho = -(&rho * &se);
            let fy = &rho.pow(3) * &c(&m[0]) + &(&rho * &c(&m[2])) * &y + &s * &y - &(&k(2, 1) * &y) * &se;
            Field3::new([fr, frho, fy])
        }
        BlowupChart::YPlus | BlowupChart::YMinus => {
            let sg = k(chart.sign(), 1);
            let (rho, x) = (Poly3::var(1), Poly3::var(2));
            let w = &rho.pow(3) * &c(&m[0]) + &(&sg * &rho) * &c(&m[2]) + &sg * &x;
            let half = &(&sg * &w) * &k(1, 2);
            let fr = &r * &half;
            let frho = -(&rho * &half);
            let fx = &sg + &(&c(a) * &x.pow(2)) + &rho.pow(2) * &c(&m[1]) - &x * &half;
            Field3::new([fr, frho, fx])
        }
    }
}

/// The `(ρ, ȳ)` field of chart `x̄ = s` restricted to `r = 0`.
pub fn directional_subsystem(p: &RescalingParams, s: i8) -> Result<PolynomialField> {
    let chart = match s {
        1 => BlowupChart::XPlus,
        -1 => BlowupChart::XMinus,
        _ => return Err(AtlasError::InvalidInput(format!("chart sign must be ±1, got {s}"))),
    };
    let f = blown_up_field_3d(p, chart);
    let restrict = |q: &Poly3| q.compose(&[Poly2::zero(), Poly2::var(0), Poly2::var(1)]);
    let [_, frho, fy] = f.components();
    Ok(PolynomialField::new(restrict(frho), restrict(fy)))
}

/// `H = ½ȳ² − ½x̄²ȳ + μ̄2 ȳ − μ̄1 x̄`.
pub fn hamiltonian(xbar: f64, ybar: f64, mu1bar: f64, mu2bar: f64) -> f64 {
    0.5 * ybar * ybar - 0.5 * xbar * xbar * ybar + mu2bar * ybar - mu1bar * xbar
}

/// Variables `(x̄, ȳ, μ̄1, μ̄2, μ̄3)` for the symbolic Hamiltonian identities.
pub type Poly5 = Poly<5>;

pub fn hamiltonian_symbolic() -> Poly5 {
    let (x, y, m1, m2) = (Poly5::var(0), Poly5::var(1), Poly5::var(2), Poly5::var(3));
    let half = Poly5::constant(rat(1, 2));
    &(&half * &y.pow(2)) - &(&half * &(&x.pow(2) * &y)) + &m2 * &y - &m1 * &x
}

/// The rescaled field at `a = −1/2` with symbolic parameters.
pub fn rescaled_field_symbolic() -> [Poly5; 2] {
    let (x, y) = (Poly5::var(0), Poly5::var(1));
    let (m1, m2, m3) = (Poly5::var(2), Poly5::var(3), Poly5::var(4));
    let fx = &y - &(&Poly5::constant(rat(1, 2)) * &x.pow(2)) + m2;
    let fy = &m1 + &(&m3 * &y) + &x * &y;
    [fx, fy]
}

/// Returns `(dH/dt, μ̄3 ȳ ∂H/∂ȳ, div)` as exact polynomials.
pub fn hamiltonian_identity_terms() -> (Poly5, Poly5, Poly5) {
    let h = hamiltonian_symbolic();
    let [fx, fy] = rescaled_field_symbolic();
    let dh = &fx * &h.derivative(0) + &fy * &h.derivative(1);
    let rhs = &(&Poly5::var(4) * &Poly5::var(1)) * &h.derivative(1);
    let div = fx.derivative(0) + fy.derivative(1);
    (dh, rhs, div)
}

/// Variables `(ρ, ȳ, μ̄1, μ̄2)` for the directional-chart identities.
pub type Poly4 = Poly<4>;

/// The `r = 0` subsystem of chart `x̄ = s` at `a = −1/2`, `μ̄3 = 0`, with
/// symbolic `μ̄1, μ̄2`.
pub fn directional_symbolic(s: i8) -> [Poly4; 2] {
    let s = Poly4::constant(rat(i64::from(s.signum()), 1));
    let (rho, y, m1, m2) = (Poly4::var(0), Poly4::var(1), Poly4::var(2), Poly4::var(3));
    let e = &y - &Poly4::constant(rat(1, 2)) + &rho.pow(2) * &m2;
    let se = &s * &e;
    let frho = -(&rho * &se);
    let fy = &rho.pow(3) * &m1 + &s * &y - &(&Poly4::constant(rat(2, 1)) * &y) * &se;
    [frho, fy]
}

/// Numerator `N` of `H̄± = N / ρ⁴` in chart `x̄ = s`.
pub fn first_integral_numerator(s: i8) -> Poly4 {
    let (rho, y, m1, m2) = (Poly4::var(0), Poly4::var(1), Poly4::var(2), Poly4::var(3));
    let half = Poly4::constant(rat(1, 2));
    let sign = Poly4::constant(rat(-i64::from(s.signum()), 1));
    &(&half * &(&y.pow(2) - &y)) + &(&(&m2 * &y) * &rho.pow(2)) + &(&sign * &m1) * &rho.pow(3)
}

/// Returns `(ρ⁵·dH̄/dt, ρ·div − 5ρ̇)`; both vanish identically when `ρ⁻⁵` is
/// an integrating factor with first integral `H̄`.
pub fn integrating_factor_terms(s: i8) -> (Poly4, Poly4) {
    let [frho, fy] = directional_symbolic(s);
    let n = first_integral_numerator(s);
    let rho = Poly4::var(0);
    let xn = &frho * &n.derivative(0) + &fy * &n.derivative(1);
    let dh = &(&xn * &rho) - &(&(&Poly4::constant(rat(4, 1)) * &n) * &frho);
    let div = frho.derivative(0) + fy.derivative(1);
    let factor = &(&rho * &div) - &(&Poly4::constant(rat(5, 1)) * &frho);
    (dh, factor)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChartSign {
    Plus,
    Minus,
}

impl ChartSign {
    pub fn value(self) -> i8 {
        match self {
            ChartSign::Plus => 1,
            ChartSign::Minus => -1,
        }
    }
}

/// `H̄± = z²/(2ρ⁴) + z/(2ρ⁴) + μ̄2(z+1)/ρ² ∓ μ̄1/ρ` with `z = ȳ − 1`.
pub fn first_integral_pm(z: f64, rho: f64, mu1bar: f64, mu2bar: f64, sign: ChartSign) -> Result<f64> {
    if rho == 0.0 {
        return Err(AtlasError::DivisionByZero("first integral evaluated at rho = 0"));
    }
    let r2 = rho * rho;
    let r4 = r2 * r2;
    let s = f64::from(sign.value());
    Ok((z * z + z) / (2.0 * r4) + mu2bar * (z + 1.0) / r2 - s * mu1bar / rho)
}

const COMPENSATOR_SERIES: f64 = 1e-8;

/// `ω(x, α) = (x^{−α} − 1)/α`, `−ln x` at `α = 0`.
pub fn compensator(x: f64, alpha: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(AtlasError::NonpositiveArgument(x));
    }
    let l = x.ln();
    if alpha.abs() < COMPENSATOR_SERIES {
        Ok(compensator_series(l, alpha))
    } else {
        Ok(compensator_closed(l, alpha))
    }
}

fn compensator_series(l: f64, alpha: f64) -> f64 {
    -l * (1.0 - 0.5 * alpha * l + alpha * alpha * l * l / 6.0)
}

fn compensator_closed(l: f64, alpha: f64) -> f64 {
    (-alpha * l).exp_m1() / alpha
}

/// Map from the rescaling chart to the closed unit disc: the projection
/// `(x̄, ȳ)` of the normalized sphere point with `ρ > 0`.
pub fn to_disc(xbar: f64, ybar: f64) -> [f64; 2] {
    let b = 1.0 + xbar * xbar;
    let c2 = ybar * ybar;
    // positive root of c2 t² + b t − 1 = 0, written without cancellation
    let t = 2.0 / (b + (b * b + 4.0 * c2).sqrt());
    [xbar * t.sqrt(), ybar * t]
}

/// Inverse of [`to_disc`] on the open disc.
pub fn from_disc(u: f64, w: f64) -> Option<[f64; 2]> {
    let rho2 = 1.0 - u * u - w * w;
    if !(rho2 > 0.0) {
        return None;
    }
    let rho = rho2.sqrt();
    Some([u / rho, w / rho2])
}

/// Boundary point of the disc for the chart point `x̄ = s`, `ȳ`, `ρ = 0`.
pub fn circle_point(s: f64, ybar: f64) -> [f64; 2] {
    let c2 = ybar * ybar;
    let t = 2.0 / (1.0 + (1.0 + 4.0 * c2).sqrt());
    [s.signum() * t.sqrt(), ybar * t]
}

pub fn critical_point_on_disc(p: &CriticalPoint) -> [f64; 2] {
    let s = match p.chart {
        BlowupChart::XMinus => -1.0,
        _ => 1.0,
    };
    circle_point(s, p.ybar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::VectorField;
    use nalgebra::Matrix3;

    fn eig3(j: [[f64; 3]; 3]) -> Vec<f64> {
        let m = Matrix3::from_fn(|i, k| j[i][k]);
        let mut v: Vec<f64> = m.complex_eigenvalues().iter().map(|c| c.re).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    fn sorted(mut v: [f64; 3]) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v.to_vec()
    }

    #[test]
    fn blowdown_examples() {
        let p = BlowupPoint {
            r: 0.0,
            xbar: 3.0,
            ybar: -2.0,
            rho: 1.0,
        };
        assert_eq!(p.blowdown(), [0.0, 0.0, 0.0]);
        let p = BlowupPoint {
            r: 2.0,
            xbar: 1.0,
            ybar: 1.0,
            rho: 0.5,
        };
        assert_eq!(p.blowdown(), [2.0, 4.0, 1.0]);
        let p = BlowupPoint {
            r: 1.0,
            xbar: 0.0,
            ybar: -1.0,
            rho: 1.0,
        };
        assert_eq!(p.blowdown(), [0.0, -1.0, 1.0]);
    }

    #[test]
    fn blowup_round_trip() {
        let p = BlowupPoint::blowup_normalized(0.3, -0.7, 0.2).unwrap();
        assert!(p.sphere_residual().abs() < 1e-14);
        let q = p.blowdown();
        assert!((q[0] - 0.3).abs() < 1e-15 && (q[1] + 0.7).abs() < 1e-15 && (q[2] - 0.2).abs() < 1e-15);
        assert!(BlowupPoint::blowup_normalized(0.0, 0.0, 0.0).is_none());
    }

    #[test]
    fn unfolding_round_trip() {
        let p = RescalingParams::from_unfolding(-0.5, 8e-3, -4e-2, 0.2, 0.2).unwrap();
        assert!((p.mu1bar - 1.0).abs() < 1e-12 && (p.mu2bar + 1.0).abs() < 1e-12 && (p.mu3bar - 1.0).abs() < 1e-12);
        let u = p.unfolding(0.2);
        assert!((u[0] - 8e-3).abs() < 1e-15 && (u[1] + 4e-2).abs() < 1e-15 && (u[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn weighted_normalization_preserves_unfolding() {
        let p = RescalingParams::new(-0.5, 2.0, -1.0, 0.5);
        let (q, k) = p.normalized().unwrap();
        assert!((q.sphere_norm() - 1.0).abs() < 1e-12);
        let nu = 0.1;
        let u = p.unfolding(nu);
        let v = q.unfolding(nu / k);
        for i in 0..3 {
            assert!((u[i] - v[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn rescaled_field_examples() {
        let f = rescaled_field(&RescalingParams::new(-1.0, 0.0, 0.0, 0.0));
        assert_eq!(f.to_string(), "x' = -x^2 + y, y' = x*y");
        let f = rescaled_field(&RescalingParams::new(-0.5, 0.0, 0.3, 0.0));
        assert!(f.divergence_poly().is_zero());
        let f = rescaled_field(&RescalingParams::new(-0.5, 0.0, 0.0, 0.25));
        assert_eq!(f.divergence_poly(), Poly2::constant(rat(1, 4)));
        let f = rescaled_field(&RescalingParams::new(0.25, 1.0, 0.0, 0.5));
        let mut want = Poly2::zero();
        want.add_term([1, 0], rat(3, 2));
        want.add_term([0, 0], rat(1, 2));
        assert_eq!(f.divergence_poly(), want);
    }

    #[test]
    fn table_one_values() {
        let pts = critical_points(-0.5).unwrap();
        assert_eq!(pts[2].eigenvalues, [0.5, -0.5, -2.0]);
        assert_eq!(pts[0].eigenvalues, [0.5, -0.5, -2.0]);
        assert_eq!(critical_points(-1.0).unwrap()[3].eigenvalues, [-0.5, 0.5, 3.0]);
        assert_eq!(critical_points(0.5), Err(AtlasError::DegenerateBlowup));
    }

    #[test]
    fn jacobian_eigenvalues_match_table() {
        for a in [-0.3, -0.5, -0.7, -1.0] {
            let p = RescalingParams::new(a, 0.3, -0.4, 0.2);
            for cp in critical_points(a).unwrap() {
                let f = blown_up_field_3d(&p, cp.chart);
                let v = f.eval(&cp.chart_state());
                assert!(v.iter().all(|c| c.abs() < 1e-14), "{:?} not singular", cp.label);
                let got = eig3(f.jacobian(cp.chart_state()));
                let want = sorted(cp.eigenvalues);
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() < 1e-10, "{a} {:?}: {got:?} vs {want:?}", cp.label);
                }
            }
        }
    }

    #[test]
    fn foliation_is_invariant_in_every_chart() {
        let p = RescalingParams::new(-0.7, 0.3, -0.1, 0.6);
        for chart in BlowupChart::ALL {
            let f = blown_up_field_3d(&p, chart);
            assert!(f.lie_derivative(&chart.nu()).is_zero(), "{chart}");
        }
    }

    #[test]
    fn charts_agree_after_change_of_coordinates() {
        // the x+ chart point (r, ρ, ȳ) is the rescaling point (rρ, 1/ρ, ȳ/ρ²)
        let p = RescalingParams::new(-0.5, 0.4, -0.3, 0.2);
        let fx = blown_up_field_3d(&p, BlowupChart::XPlus);
        let fr = rescaled_field(&p);
        let (r, rho, y) = (0.3, 0.7, 0.4);
        let v = fx.eval(&[r, rho, y]);
        let (xb, yb) = (1.0 / rho, y / (rho * rho));
        let w = fr.eval_field([xb, yb]);
        // time in the x+ chart is rescaled by ρ relative to the rescaling chart
        let dxb = -v[1] / (rho * rho);
        let dyb = v[2] / (rho * rho) - 2.0 * y * v[1] / rho.powi(3);
        assert!((dxb - w[0] * rho).abs() < 1e-12, "{dxb} {}", w[0] * rho);
        assert!((dyb - w[1] * rho).abs() < 1e-12);
    }

    #[test]
    fn subsystem_example() {
        let p = RescalingParams::new(-0.5, 0.0, 0.0, 0.0);
        let f = directional_subsystem(&p, 1).unwrap();
        assert_eq!(f.to_string(), "x' = -x*y + 1/2*x, y' = -2*y^2 + 2*y");
        assert!(directional_subsystem(&p, 0).is_err());
    }

    #[test]
    fn subsystem_matches_symbolic_version() {
        for s in [1i8, -1] {
            let p = RescalingParams::new(-0.5, 0.75, -0.25, 0.0);
            let f = directional_subsystem(&p, s).unwrap();
            let [frho, fy] = directional_symbolic(s);
            let fix = |q: &Poly4| {
                q.compose(&[
                    Poly2::var(0),
                    Poly2::var(1),
                    Poly2::constant(rat(3, 4)),
                    Poly2::constant(rat(-1, 4)),
                ])
            };
            assert_eq!(&fix(&frho), f.px());
            assert_eq!(&fix(&fy), f.py());
        }
    }

    #[test]
    fn hamiltonian_examples() {
        assert_eq!(hamiltonian(0.0, 0.0, 0.3, 0.7), 0.0);
        assert_eq!(hamiltonian(1.0, 1.0, 0.0, 0.0), 0.0);
        let (dh, rhs, div) = hamiltonian_identity_terms();
        assert_eq!(dh, rhs);
        assert_eq!(div, Poly5::var(4));
    }

    #[test]
    fn integrating_factor_identities() {
        for s in [1i8, -1] {
            let (dh, factor) = integrating_factor_terms(s);
            assert!(dh.is_zero(), "{s}");
            assert!(factor.is_zero(), "{s}");
        }
    }

    #[test]
    fn first_integral_matches_numerator() {
        let n = first_integral_numerator(1);
        let (rho, y, m1, m2) = (0.6, 1.3, 0.2, -0.4);
        let h = first_integral_pm(y - 1.0, rho, m1, m2, ChartSign::Plus).unwrap();
        assert!((h - n.eval(&[rho, y, m1, m2]) / rho.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn first_integral_examples() {
        for rho in [0.1, 1.0, 3.0] {
            assert_eq!(first_integral_pm(0.0, rho, 0.0, 0.0, ChartSign::Plus).unwrap(), 0.0);
            assert_eq!(first_integral_pm(0.0, rho, 0.0, 0.0, ChartSign::Minus).unwrap(), 0.0);
        }
        let a = first_integral_pm(0.2, 0.5, 0.3, 0.1, ChartSign::Plus).unwrap();
        let b = first_integral_pm(0.2, 0.5, -0.3, 0.1, ChartSign::Minus).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            first_integral_pm(0.2, 0.0, 0.3, 0.1, ChartSign::Plus),
            Err(AtlasError::DivisionByZero(_))
        ));
    }

    #[test]
    fn compensator_examples() {
        assert_eq!(compensator(1.0, 0.3).unwrap(), 0.0);
        assert_eq!(compensator(1.0, 1e-12).unwrap(), 0.0);
        assert_eq!(compensator(0.25, 0.0).unwrap(), -(0.25f64).ln());
        let direct = (0.5f64.powf(-0.1) - 1.0) / 0.1;
        assert!((compensator(0.5, 0.1).unwrap() - direct).abs() < 1e-14);
        assert!((compensator(0.5, 1e-12).unwrap() - 2f64.ln()).abs() < 1e-9);
        assert_eq!(compensator(0.0, 0.1), Err(AtlasError::NonpositiveArgument(0.0)));
        assert!(compensator(-1.0, 0.1).is_err());
    }

    #[test]
    fn compensator_branches_agree_at_threshold() {
        for x in [0.01, 0.3, 0.9] {
            let l = f64::ln(x);
            let below = compensator_series(l, COMPENSATOR_SERIES);
            let above = compensator_closed(l, COMPENSATOR_SERIES);
            assert!((below - above).abs() < 1e-12 * below.abs().max(1.0));
        }
    }

    #[test]
    fn disc_atlas() {
        let cps = critical_points(-0.5).unwrap();
        let p1 = critical_point_on_disc(&cps[0]);
        let p2 = critical_point_on_disc(&cps[1]);
        assert_eq!(p1, [-1.0, 0.0]);
        assert_eq!(p2, [1.0, 0.0]);
        for cp in &cps {
            let q = critical_point_on_disc(cp);
            assert!((q[0].hypot(q[1]) - 1.0).abs() < 1e-14);
        }
        let q = to_disc(0.4, -1.2);
        assert!(q[0].hypot(q[1]) < 1.0);
        let back = from_disc(q[0], q[1]).unwrap();
        assert!((back[0] - 0.4).abs() < 1e-12 && (back[1] + 1.2).abs() < 1e-12);
        // far out along a P3 direction the disc image tends to P3
        let far = to_disc(1e6, 1e12);
        let p3 = critical_point_on_disc(&cps[2]);
        assert!((far[0] - p3[0]).abs() < 1e-5 && (far[1] - p3[1]).abs() < 1e-5);
    }

    #[test]
    fn chart_names_parse() {
        for c in BlowupChart::ALL {
            assert_eq!(c.to_string().parse::<BlowupChart>().unwrap(), c);
        }
        assert_eq!("z+".parse::<BlowupChart>(), Err(AtlasError::UnknownChart("z+".into())));
        assert!(blown_up_field_named(&RescalingParams::new(-0.5, 0.0, 1.0, 0.0), "q").is_err());
    }
}
