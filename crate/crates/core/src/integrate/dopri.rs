//! Dormand–Prince 5(4) stepper with the continuous extension of Hairer & Wanner.

use crate::error::{AtlasError, Result};
use crate::field::VectorField;

use super::IntegratorConfig;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Interpolation data for one accepted step on `[t0, t0 + h]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSegment<const D: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; D]; 5],
}

impl<const D: usize> DenseSegment<D> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn start(&self) -> [f64; D] {
        self.rcont[0]
    }

    pub fn end(&self) -> [f64; D] {
        std::array::from_fn(|i| self.rcont[0][i] + self.rcont[1][i])
    }

    /// Evaluates the interpolant at `t` (extrapolates outside the step).
    pub fn eval(&self, t: f64) -> [f64; D] {
        let th = (t - self.t0) / self.h;
        self.eval_theta(th)
    }

    pub fn eval_theta(&self, th: f64) -> [f64; D] {
        let th1 = 1.0 - th;
        let r = &self.rcont;
        std::array::from_fn(|i| r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i]))))
    }

    /// Coefficients as flat rows, for serialization.
    pub fn coefficients(&self) -> Vec<Vec<f64>> {
        self.rcont.iter().map(|r| r.to_vec()).collect()
    }
}

pub(crate) struct Stepper<'a, V: ?Sized, const D: usize> {
    f: &'a V,
    cfg: &'a IntegratorConfig,
    pub t: f64,
    pub y: [f64; D],
    k1: [f64; D],
    h: f64,
    steps: usize,
    rejected_last: bool,
}

fn norm<const D: usize>(v: &[f64; D]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn finite<const D: usize>(v: &[f64; D]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl<'a, V: VectorField<D> + ?Sized, const D: usize> Stepper<'a, V, D> {
    pub fn new(f: &'a V, t0: f64, y0: [f64; D], cfg: &'a IntegratorConfig) -> Result<Self> {
        if !finite(&y0) {
            return Err(AtlasError::NonFinite { t: t0 });
        }
        let k1 = f.eval(&y0);
        if !finite(&k1) {
            return Err(AtlasError::NonFinite { t: t0 });
        }
        let mut s = Self {
            f,
            cfg,
            t: t0,
            y: y0,
            k1,
            h: 0.0,
            steps: 0,
            rejected_last: false,
        };
        s.h = match (cfg.fixed_step, cfg.h0) {
            (Some(h), _) => h,
            (None, Some(h)) => h,
            (None, None) => s.initial_step(),
        };
        Ok(s)
    }

    fn scale(&self, i: usize, a: &[f64; D], b: &[f64; D]) -> f64 {
        self.cfg.atol + self.cfg.rtol * a[i].abs().max(b[i].abs())
    }

    fn initial_step(&self) -> f64 {
        let y = &self.y;
        let sk: [f64; D] = std::array::from_fn(|i| self.scale(i, y, y));
        let rms = |v: &[f64; D]| (v.iter().zip(&sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / D as f64).sqrt();
        let d0 = rms(y);
        let d1 = rms(&self.k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.cfg.hmax);
        let y1 = axpy(y, h0, &[(1.0, &self.k1)]);
        let k2 = self.f.eval(&y1);
        let diff: [f64; D] = std::array::from_fn(|i| k2[i] - self.k1[i]);
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.cfg.hmax)
    }

    /// Takes one accepted step, never passing `t_end`.
    pub fn step(&mut self, t_end: f64) -> Result<DenseSegment<D>> {
        loop {
            if self.steps >= self.cfg.max_steps {
                return Err(AtlasError::TooManySteps { t: self.t });
            }
            self.steps += 1;
            let mut h = self.h.min(self.cfg.hmax);
            let mut last = false;
            if self.t + h >= t_end {
                h = t_end - self.t;
                last = true;
            }
            if h <= 0.0 || (!last && h <= self.cfg.underflow_factor * self.t.abs()) {
                return Err(AtlasError::StepUnderflow { t: self.t, h });
            }
            let (y1, k7, err, seg) = self.attempt(h);
            if !finite(&y1) || !finite(&k7) {
                if self.cfg.fixed_step.is_some() {
                    return Err(AtlasError::NonFinite { t: self.t + h });
                }
                self.h = 0.25 * h;
                self.rejected_last = true;
                continue;
            }
            let accept = self.cfg.fixed_step.is_some() || err <= 1.0;
            if accept {
                if self.cfg.fixed_step.is_none() {
                    let mut fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
                    fac = fac.clamp(0.2, 10.0);
                    if self.rejected_last {
                        fac = fac.min(1.0);
                    }
                    // A truncated final step says nothing about the natural step size.
                    self.h = if last { self.h.max(h * fac) } else { h * fac };
                }
                self.rejected_last = false;
                self.t = if last { t_end } else { self.t + h };
                self.y = y1;
                self.k1 = k7;
                if norm(&self.y) > self.cfg.blowup_bound {
                    return Err(AtlasError::BlowupDetected {
                        t: self.t,
                        bound: self.cfg.blowup_bound,
                    });
                }
                return Ok(seg);
            }
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            self.h = h * fac;
            self.rejected_last = true;
        }
    }

    fn attempt(&self, h: f64) -> ([f64; D], [f64; D], f64, DenseSegment<D>) {
        let f = self.f;
        let y = &self.y;
        let k1 = &self.k1;
        let k2 = f.eval(&axpy(y, h, &[(A21, k1)]));
        let k3 = f.eval(&axpy(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = f.eval(&axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]));
        let k5 = f.eval(&axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f.eval(&axpy(
            y,
            h,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f.eval(&y1);

        let mut acc = 0.0;
        for i in 0..D {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sk = self.scale(i, y, &y1);
            acc += (e / sk).powi(2);
        }
        let err = (acc / D as f64).sqrt();

        let mut rcont = [[0.0; D]; 5];
        for i in 0..D {
            let ydiff = y1[i] - y[i];
            let bspl = h * k1[i] - ydiff;
            rcont[0][i] = y[i];
            rcont[1][i] = ydiff;
            rcont[2][i] = bspl;
            rcont[3][i] = ydiff - h * k7[i] - bspl;
            rcont[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        let seg = DenseSegment { t0: self.t, h, rcont };
        (y1, k7, err, seg)
    }

    /// Field value at the current state (first stage of the next step).
    pub fn velocity(&self) -> [f64; D] {
        self.k1
    }
}
