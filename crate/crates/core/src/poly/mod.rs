//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! `Poly<N>` stores monomials keyed by exponent arrays. Zero coefficients are
//! never stored, so structural equality is polynomial equality.

mod resultant;
mod univariate;

pub use resultant::{resultant_x, resultant_y};
pub use univariate::UPoly;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational from a numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact rational value of a finite `f64` (every double is a dyadic rational).
///
/// Non-finite inputs map to zero; callers validate finiteness upstream.
pub fn rat_from_f64(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

pub fn rat_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Fallback for values whose parts overflow i64/f64 individually.
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Parses `"3"`, `"-2/15"`, `"0.1"` or `"1e-3"` into an exact rational.
///
/// Decimal literals are read as the decimal fraction they spell (`0.1 = 1/10`).
pub fn parse_rat(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, frac) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{int}{frac}0").parse().ok()?;
    let scale = exp - frac.len() as i32 - 1;
    let ten = BigInt::from(10);
    let mut q = BigRational::from_integer(digits);
    if scale >= 0 {
        q *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        q /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -q } else { q })
}

pub type Exponent<const N: usize> = [u32; N];

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Poly<const N: usize> {
    terms: BTreeMap<Exponent<N>, BigRational>,
}

pub type Poly2 = Poly<2>;
pub type Poly3 = Poly<3>;

impl<const N: usize> Default for Poly<N> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<const N: usize> Poly<N> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial([0; N], c)
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    /// The coordinate function `x_k`.
    pub fn var(k: usize) -> Self {
        assert!(k < N, "variable index {k} out of range for {N} variables");
        let mut e = [0; N];
        e[k] = 1;
        Self::monomial(e, BigRational::one())
    }

    pub fn monomial(exp: Exponent<N>, coeff: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(exp, coeff);
        p
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Exponent<N>, BigRational)>,
    {
        let mut p = Self::zero();
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    /// Adds `coeff * x^exp`, dropping the monomial if it cancels.
    pub fn add_term(&mut self, exp: Exponent<N>, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&exp) {
            Some(c) => {
                *c += coeff;
                if c.is_zero() {
                    self.terms.remove(&exp);
                }
            }
            None => {
                self.terms.insert(exp, coeff);
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&k| k == 0))
    }

    /// Max total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Degree in a single variable.
    pub fn degree_in(&self, k: usize) -> u32 {
        self.terms.keys().map(|e| e[k]).max().unwrap_or(0)
    }

    pub fn coeff(&self, exp: &Exponent<N>) -> BigRational {
        self.terms.get(exp).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent<N>, &BigRational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(e, v)| (*e, v * c)).collect(),
        }
    }

    pub fn derivative(&self, k: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[k] == 0 {
                continue;
            }
            let mut ne = *e;
            ne[k] -= 1;
            out.add_term(ne, c * BigRational::from_integer(BigInt::from(e[k])));
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn eval_exact(&self, x: &[BigRational; N]) -> BigRational {
        let mut total = BigRational::zero();
        for (e, c) in &self.terms {
            let mut m = c.clone();
            for k in 0..N {
                for _ in 0..e[k] {
                    m *= &x[k];
                }
            }
            total += m;
        }
        total
    }

    /// Floating-point evaluation; coefficients are rounded at call time.
    pub fn eval(&self, x: &[f64; N]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| rat_to_f64(c) * monomial_value(e, x))
            .sum()
    }

    /// Coefficients rounded once to `f64` for repeated evaluation.
    pub fn compile(&self) -> CompiledPoly<N> {
        CompiledPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, rat_to_f64(c))).collect(),
        }
    }

    /// Substitutes `x_k -> subs[k]`, producing a polynomial in `M` variables.
    pub fn compose<const M: usize>(&self, subs: &[Poly<M>; N]) -> Poly<M> {
        // Cache powers per variable so repeated exponents are built once.
        let mut powers: Vec<Vec<Poly<M>>> = subs.iter().map(|s| vec![Poly::<M>::one(), s.clone()]).collect();
        let mut out = Poly::<M>::zero();
        for (e, c) in &self.terms {
            let mut m = Poly::<M>::constant(c.clone());
            for k in 0..N {
                let need = e[k] as usize;
                while powers[k].len() <= need {
                    let next = powers[k].last().unwrap() * &subs[k];
                    powers[k].push(next);
                }
                if need > 0 {
                    m = &m * &powers[k][need];
                }
            }
            out = out + m;
        }
        out
    }

    /// Exact division by `x_k^n` when every monomial carries that factor.
    pub fn div_by_var_power(&self, k: usize, n: u32) -> Option<Self> {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[k] < n {
                return None;
            }
            let mut ne = *e;
            ne[k] -= n;
            out.add_term(ne, c.clone());
        }
        Some(out)
    }

    /// Drops every monomial of total degree above `max_degree`.
    pub fn truncate(&self, max_degree: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.iter().sum::<u32>() <= max_degree)
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        }
    }

    /// Lowest total degree present; `None` for the zero polynomial.
    pub fn order(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum::<u32>()).min()
    }

    /// Largest absolute coefficient (as `f64`), zero for the zero polynomial.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| rat_to_f64(&c.abs())).fold(0.0, f64::max)
    }

    pub fn display_with<'a>(&'a self, names: &'a [&'a str; N]) -> PolyDisplay<'a, N> {
        PolyDisplay { poly: self, names }
    }
}

fn monomial_value<const N: usize>(e: &Exponent<N>, x: &[f64; N]) -> f64 {
    let mut m = 1.0;
    for k in 0..N {
        if e[k] != 0 {
            m *= x[k].powi(e[k] as i32);
        }
    }
    m
}

/// A polynomial with `f64` coefficients, for hot evaluation loops.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledPoly<const N: usize> {
    terms: Vec<(Exponent<N>, f64)>,
}

impl<const N: usize> CompiledPoly<N> {
    pub fn eval(&self, x: &[f64; N]) -> f64 {
        self.terms.iter().map(|(e, c)| c * monomial_value(e, x)).sum()
    }
}

impl<const N: usize> Add for Poly<N> {
    type Output = Poly<N>;
    fn add(mut self, rhs: Poly<N>) -> Poly<N> {
        for (e, c) in rhs.terms {
            self.add_term(e, c);
        }
        self
    }
}

impl<'a, const N: usize> Add<&'a Poly<N>> for &'a Poly<N> {
    type Output = Poly<N>;
    fn add(self, rhs: &Poly<N>) -> Poly<N> {
        self.clone() + rhs.clone()
    }
}

impl<const N: usize> Neg for Poly<N> {
    type Output = Poly<N>;
    fn neg(self) -> Poly<N> {
        Poly {
            terms: self.terms.into_iter().map(|(e, c)| (e, -c)).collect(),
        }
    }
}

impl<const N: usize> Sub for Poly<N> {
    type Output = Poly<N>;
    fn sub(self, rhs: Poly<N>) -> Poly<N> {
        self + (-rhs)
    }
}

impl<'a, const N: usize> Sub<&'a Poly<N>> for &'a Poly<N> {
    type Output = Poly<N>;
    fn sub(self, rhs: &Poly<N>) -> Poly<N> {
        self.clone() - rhs.clone()
    }
}

impl<'a, const N: usize> Mul<&'a Poly<N>> for &'a Poly<N> {
    type Output = Poly<N>;
    fn mul(self, rhs: &Poly<N>) -> Poly<N> {
        let mut out = Poly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let mut e = [0; N];
                for k in 0..N {
                    e[k] = ea[k] + eb[k];
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl<const N: usize> Mul for Poly<N> {
    type Output = Poly<N>;
    fn mul(self, rhs: Poly<N>) -> Poly<N> {
        &self * &rhs
    }
}

pub struct PolyDisplay<'a, const N: usize> {
    poly: &'a Poly<N>,
    names: &'a [&'a str; N],
}

impl<const N: usize> fmt::Display for PolyDisplay<'_, N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // Highest total degree first reads most naturally.
        let mut terms: Vec<_> = self.poly.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| {
            let da: u32 = a.iter().sum();
            let db: u32 = b.iter().sum();
            db.cmp(&da).then(b.cmp(a))
        });
        for (i, (e, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let is_const = e.iter().all(|&k| k == 0);
            let mut first = true;
            if !mag.is_one() || is_const {
                write!(f, "{}", mag)?;
                first = false;
            }
            for k in 0..N {
                if e[k] == 0 {
                    continue;
                }
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "{}", self.names[k])?;
                if e[k] > 1 {
                    write!(f, "^{}", e[k])?;
                }
            }
        }
        Ok(())
    }
}
