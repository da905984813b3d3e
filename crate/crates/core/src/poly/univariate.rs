use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::{rat_from_f64, rat_to_f64, Poly};

/// Dense univariate polynomial, coefficients stored low to high.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UPoly {
    coeffs: Vec<BigRational>,
}

impl UPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn eval_exact(&self, x: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + rat_to_f64(c))
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_integer(k.into()))
                .collect(),
        )
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => self.scale(&l.recip()),
            None => Self::zero(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = BigRational::zero();
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&z) + other.coeffs.get(k).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let z = BigRational::zero();
        Self::new(
            (0..n)
                .map(|k| self.coeffs.get(k).unwrap_or(&z) - other.coeffs.get(k).unwrap_or(&z))
                .collect(),
        )
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, d: &Self) -> (Self, Self) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead = d.leading().unwrap().clone();
        let mut r = self.coeffs.clone();
        let mut q = vec![BigRational::zero(); r.len().saturating_sub(dd).max(1)];
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1 - dd;
            let c = r.last().unwrap() / &lead;
            for (j, dc) in d.coeffs.iter().enumerate() {
                r[k + j] -= &c * dc;
            }
            q[k] = c;
            r.pop();
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
        }
        (Self::new(q), Self::new(r))
    }

    pub fn rem(&self, d: &Self) -> Self {
        self.div_rem(d).1
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Product of the distinct irreducible factors (same real roots, all simple).
    pub fn squarefree(&self) -> Self {
        if self.degree().unwrap_or(0) == 0 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == Some(0) {
            self.monic()
        } else {
            self.div_rem(&g).0.monic()
        }
    }

    pub fn sturm_sequence(&self) -> Vec<Self> {
        let mut seq = vec![self.clone(), self.derivative()];
        loop {
            let n = seq.len();
            if seq[n - 1].is_zero() {
                seq.pop();
                break;
            }
            let r = seq[n - 2].rem(&seq[n - 1]);
            if r.is_zero() {
                break;
            }
            seq.push(r.scale(&-BigRational::one()));
        }
        seq
    }

    /// Number of distinct real roots in the half-open interval `(lo, hi]`.
    pub fn count_roots(&self, lo: &BigRational, hi: &BigRational) -> usize {
        let seq = self.squarefree().sturm_sequence();
        sign_changes(&seq, lo).saturating_sub(sign_changes(&seq, hi))
    }

    /// Bound on the modulus of every root (Cauchy).
    pub fn root_bound(&self) -> BigRational {
        let Some(lead) = self.leading() else {
            return BigRational::zero();
        };
        let m = self.coeffs[..self.coeffs.len() - 1]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(BigRational::zero(), |a, b| if b > a { b } else { a });
        m + BigRational::one()
    }

    /// Distinct real roots in `[lo, hi]`, ascending, each located to an absolute
    /// width below `tol` (plus rounding to `f64`).
    pub fn real_roots_in(&self, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        if self.degree().unwrap_or(0) == 0 {
            return Vec::new();
        }
        let p = self.squarefree();
        let seq = p.sturm_sequence();
        // Nudge the left end out so a root sitting exactly on `lo` is counted.
        let lo_q = rat_from_f64(lo) - rat_from_f64(tol.max(f64::MIN_POSITIVE));
        let hi_q = rat_from_f64(hi);
        let tol_q = rat_from_f64(tol);
        let mut roots = Vec::new();
        let mut stack = vec![(lo_q, hi_q)];
        while let Some((a, b)) = stack.pop() {
            let n = sign_changes(&seq, &a).saturating_sub(sign_changes(&seq, &b));
            if n == 0 {
                continue;
            }
            if n == 1 {
                roots.push(rat_to_f64(&refine_simple_root(&p, a, b, &tol_q)));
                continue;
            }
            let mid = (&a + &b) / BigRational::from_integer(2.into());
            if &b - &a < tol_q {
                roots.push(rat_to_f64(&mid));
                continue;
            }
            stack.push((mid.clone(), b));
            stack.push((a, mid));
        }
        roots.retain(|r| *r >= lo - tol && *r <= hi);
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
    }

    /// All distinct real roots, ascending.
    pub fn real_roots(&self, tol: f64) -> Vec<f64> {
        let b = rat_to_f64(&self.root_bound());
        self.real_roots_in(-b, b, tol)
    }

    pub fn to_poly(&self) -> Poly<1> {
        Poly::from_terms(self.coeffs.iter().enumerate().map(|(k, c)| ([k as u32], c.clone())))
    }

    pub fn from_poly(p: &Poly<1>) -> Self {
        let n = p.degree() as usize + 1;
        let mut c = vec![BigRational::zero(); n];
        for (e, v) in p.terms() {
            c[e[0] as usize] = v.clone();
        }
        Self::new(c)
    }
}

fn sign_changes(seq: &[UPoly], x: &BigRational) -> usize {
    let mut last = 0i8;
    let mut n = 0;
    for p in seq {
        let v = p.eval_exact(x);
        let s = if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                n += 1;
            }
            last = s;
        }
    }
    n
}

/// Exact bisection on a squarefree polynomial with exactly one root in `(a, b]`.
fn refine_simple_root(p: &UPoly, mut a: BigRational, mut b: BigRational, tol: &BigRational) -> BigRational {
    let two = BigRational::from_integer(2.into());
    let fb = p.eval_exact(&b);
    if fb.is_zero() {
        return b;
    }
    let sb = fb.is_positive();
    while &b - &a > *tol {
        let m = (&a + &b) / &two;
        let fm = p.eval_exact(&m);
        if fm.is_zero() {
            return m;
        }
        if fm.is_positive() == sb {
            b = m;
        } else {
            a = m;
        }
    }
    (a + b) / two
}

#[cfg(test)]
mod tests {
    use super::super::rat;
    use super::*;

    fn up(c: &[i64]) -> UPoly {
        UPoly::new(c.iter().map(|&k| rat(k, 1)).collect())
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        assert_eq!(up(&[1, 2, 0, 0]).degree(), Some(1));
        assert!(up(&[0, 0]).is_zero());
    }

    #[test]
    fn division_identity() {
        let a = up(&[-1, 0, 0, 1]);
        let d = up(&[-1, 1]);
        let (q, r) = a.div_rem(&d);
        assert!(r.is_zero());
        assert_eq!(q, up(&[1, 1, 1]));
    }

    #[test]
    fn gcd_recovers_common_factor() {
        // (x-1)(x+2) and (x-1)(x-3)
        let a = up(&[-2, 1, 1]);
        let b = up(&[3, -4, 1]);
        assert_eq!(a.gcd(&b), up(&[-1, 1]));
    }

    #[test]
    fn sturm_counts_roots() {
        // (x-1)^2 (x+2): two distinct roots.
        let p = up(&[1, -2, 1]).mul(&up(&[2, 1]));
        assert_eq!(p.count_roots(&rat(-10, 1), &rat(10, 1)), 2);
        assert_eq!(p.count_roots(&rat(0, 1), &rat(10, 1)), 1);
    }

    #[test]
    fn isolates_irrational_roots() {
        let p = up(&[-2, 0, 1]);
        let r = p.real_roots(1e-15);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 2f64.sqrt()).abs() < 1e-14);
        assert!((r[1] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn no_real_roots() {
        assert!(up(&[1, 0, 1]).real_roots(1e-12).is_empty());
    }

    #[test]
    fn rational_roots_located() {
        let r = up(&[0, -1, 1]).real_roots(1e-14);
        assert_eq!(r.len(), 2);
        assert!(r[0].abs() < 1e-13 && (r[1] - 1.0).abs() < 1e-13);
    }
}
