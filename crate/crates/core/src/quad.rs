//! One-dimensional quadrature: Gauss–Lobatto rules and adaptive Gauss–Kronrod.

const LOBATTO5_NODES: [f64; 5] = [-1.0, -0.654_653_670_707_977_1, 0.0, 0.654_653_670_707_977_1, 1.0];
const LOBATTO5_WEIGHTS: [f64; 5] = [0.1, 49.0 / 90.0, 32.0 / 45.0, 49.0 / 90.0, 0.1];

/// Five-point Gauss–Lobatto rule on `[a, b]` (exact for degree 7).
pub fn lobatto5<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let m = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    LOBATTO5_NODES
        .iter()
        .zip(LOBATTO5_WEIGHTS)
        .map(|(x, w)| w * f(m + r * x))
        .sum::<f64>()
        * r
}

/// Three-point Gauss–Lobatto (Simpson) rule on `[a, b]`.
pub fn lobatto3<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
}

/// Adaptive five-point Lobatto with the three-point rule as error estimate.
///
/// Returns the integral and the accumulated error estimate.
pub fn adaptive_lobatto<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
    let fine = lobatto5(&mut *f, a, b);
    let coarse = lobatto3(&mut *f, a, b);
    let err = (fine - coarse).abs();
    if err <= tol.max(1e-15 * fine.abs()) || depth == 0 {
        return (fine, err);
    }
    let m = 0.5 * (a + b);
    let (l, el) = adaptive_lobatto(f, a, m, 0.5 * tol, depth - 1);
    let (r, er) = adaptive_lobatto(f, m, b, 0.5 * tol, depth - 1);
    (l + r, el + er)
}

const GK_XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss–Kronrod 7/15 on `[a, b]`: (Kronrod value, |Kronrod − Gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * GK_WK[7];
    let mut rg = fc * GK_WG[3];
    for j in 0..7 {
        let dx = h * GK_XK[j];
        let s = f(c - dx) + f(c + dx);
        rk += GK_WK[j] * s;
        // Gauss nodes are the odd-indexed Kronrod nodes.
        if j % 2 == 1 {
            rg += GK_WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Globally adaptive GK15 with interval bisection on the worst subinterval.
pub fn integrate_gk<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> (f64, f64) {
    let (v, e) = gk15(&mut f, a, b);
    let mut parts = vec![(a, b, v, e)];
    for _ in 0..2000 {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
    // Sum in a fixed order so results do not depend on the refinement history.
    parts.sort_by(|x, y| x.0.total_cmp(&y.0));
    (parts.iter().map(|p| p.2).sum(), parts.iter().map(|p| p.3).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lobatto5_exact_for_degree_seven() {
        let v = lobatto5(|x| x.powi(7) + 3.0 * x.powi(6) - x, 0.0, 2.0);
        let exact = 2f64.powi(8) / 8.0 + 3.0 * 2f64.powi(7) / 7.0 - 2.0;
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn simpson_exact_for_cubics() {
        let v = lobatto3(|x| x * x * x, -1.0, 3.0);
        assert!((v - 20.0).abs() < 1e-13);
    }

    #[test]
    fn adaptive_lobatto_handles_peak() {
        let mut f = |x: f64| 1.0 / (1e-4 + x * x);
        let (v, _) = adaptive_lobatto(&mut f, -1.0, 1.0, 1e-10, 30);
        let exact = 2.0 * (1.0 / 1e-4f64.sqrt()) * (1.0 / 1e-4f64.sqrt()).atan();
        assert!((v - exact).abs() / exact < 1e-9);
    }

    #[test]
    fn gk_integrates_smooth_functions() {
        let (v, _) = integrate_gk(f64::sin, 0.0, std::f64::consts::PI, 1e-14, 1e-14);
        assert!((v - 2.0).abs() < 1e-13);
        let (w, _) = integrate_gk(|x| 1.0 / (1.0 + x * x), -1e4, 1e4, 1e-13, 1e-13);
        assert!((w - 2.0 * 1e4f64.atan()).abs() < 1e-11);
    }
}
