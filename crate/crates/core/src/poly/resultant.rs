use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Poly2, UPoly};

/// Resultant of `p` and `q` with respect to `y`, as a polynomial in `x`.
pub fn resultant_y(p: &Poly2, q: &Poly2) -> UPoly {
    resultant_in(p, q, 1)
}

/// Resultant of `p` and `q` with respect to `x`, as a polynomial in `y`.
pub fn resultant_x(p: &Poly2, q: &Poly2) -> UPoly {
    resultant_in(p, q, 0)
}

/// Sylvester resultant eliminating variable `elim`, reconstructed by
/// evaluating the other variable at integer nodes and interpolating exactly.
fn resultant_in(p: &Poly2, q: &Poly2, elim: usize) -> UPoly {
    let keep = 1 - elim;
    let m = p.degree_in(elim) as usize;
    let n = q.degree_in(elim) as usize;
    // The resultant has degree at most deg(p)*deg(q) in the kept variable.
    let bound = (p.degree() as usize) * (q.degree() as usize);
    let nodes: Vec<BigRational> = (0..=bound)
        .map(|k| BigRational::from_integer((k as i64).into()))
        .collect();
    let values: Vec<BigRational> = nodes
        .iter()
        .map(|t| {
            let a = specialize(p, keep, t, m);
            let b = specialize(q, keep, t, n);
            sylvester_det(&a, &b)
        })
        .collect();
    lagrange(&nodes, &values)
}

/// Coefficients (low to high, exactly `deg + 1` long) of `p` in the eliminated
/// variable after fixing the kept variable to `t`.
fn specialize(p: &Poly2, keep: usize, t: &BigRational, deg: usize) -> Vec<BigRational> {
    let mut c = vec![BigRational::zero(); deg + 1];
    for (e, v) in p.terms() {
        let mut term = v.clone();
        for _ in 0..e[keep] {
            term *= t;
        }
        c[e[1 - keep] as usize] += term;
    }
    c
}

fn sylvester_det(a: &[BigRational], b: &[BigRational]) -> BigRational {
    let m = a.len() - 1;
    let n = b.len() - 1;
    let size = m + n;
    if size == 0 {
        return BigRational::one();
    }
    let mut mat = vec![vec![BigRational::zero(); size]; size];
    for i in 0..n {
        for (k, c) in a.iter().rev().enumerate() {
            mat[i][i + k] = c.clone();
        }
    }
    for i in 0..m {
        for (k, c) in b.iter().rev().enumerate() {
            mat[n + i][i + k] = c.clone();
        }
    }
    det(mat)
}

fn det(mut a: Vec<Vec<BigRational>>) -> BigRational {
    let n = a.len();
    let mut d = BigRational::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        let p = a[col][col].clone();
        d *= &p;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &p;
            for c in col..n {
                let sub = &f * &a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    d
}

fn lagrange(nodes: &[BigRational], values: &[BigRational]) -> UPoly {
    let mut out = UPoly::zero();
    for (i, xi) in nodes.iter().enumerate() {
        if values[i].is_zero() {
            continue;
        }
        let mut basis = UPoly::new(vec![BigRational::one()]);
        let mut denom = BigRational::one();
        for (j, xj) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            basis = basis.mul(&UPoly::new(vec![-xj.clone(), BigRational::one()]));
            denom *= xi - xj;
        }
        let term = basis.scale(&(&values[i] / denom));
        out = out.add(&term);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{rat, Poly2};
    use super::*;

    #[test]
    fn resultant_of_circle_and_line() {
        // x^2 + y^2 - 1 and y - x: eliminating y gives 2x^2 - 1 (up to sign).
        let x = Poly2::var(0);
        let y = Poly2::var(1);
        let circle = &x * &x + &y * &y - Poly2::constant(rat(1, 1));
        let line = &y - &x;
        let r = resultant_y(&circle, &line).monic();
        assert_eq!(r, UPoly::new(vec![rat(-1, 2), rat(0, 1), rat(1, 1)]));
    }

    #[test]
    fn common_factor_gives_zero_resultant() {
        let x = Poly2::var(0);
        let y = Poly2::var(1);
        let f = &x - &y;
        let p = &f * &(&x + &Poly2::constant(rat(1, 1)));
        let q = &f * &y;
        assert!(resultant_y(&p, &q).is_zero());
        assert!(resultant_x(&p, &q).is_zero());
    }
}
