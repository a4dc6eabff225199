//! Explicit Runge-Kutta integrators over fixed-size state arrays.
//!
//! [`DormandPrince`] is the adaptive 5(4) pair with the free fourth-order
//! continuous extension, used for all production runs. [`rk4_fixed`] is the
//! classical fixed-step scheme, kept as an independent cross-check.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("step size collapsed to {h:e} s at t = {t} s")]
    StepCollapsed { t: f64, h: f64 },
    #[error("non-finite state at t = {0} s")]
    NonFinite(f64),
    #[error("invalid integrator setting: {0}")]
    InvalidSetting(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel: 1e-6, abs: 1e-9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
// Fifth-order weights; also the last stage row (FSAL).
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
// Difference between the fifth- and embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output coefficients (Hairer, Norsett & Wanner).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Interpolant over one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.r;
        std::array::from_fn(|i| r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i]))))
    }
}

/// Adaptive Dormand-Prince 5(4) integrator with local error control.
#[derive(Debug, Clone, Copy)]
pub struct DormandPrince {
    pub tol: Tolerances,
    pub max_step: f64,
    pub min_step: f64,
    pub initial_step: f64,
}

impl DormandPrince {
    pub fn new(tol: Tolerances) -> Self {
        Self { tol, max_step: f64::INFINITY, min_step: 1e-8, initial_step: 1e-4 }
    }

    pub fn max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    /// Integrates `dy/dt = f(t, y)` from `t0` to `t_end`, handing every
    /// accepted step's interpolant to `on_step`.
    pub fn integrate<const N: usize, F, S>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut on_step: S,
    ) -> Result<([f64; N], StepStats), IntegratorError>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        S: FnMut(&DenseStep<N>),
    {
        if !(self.tol.rel > 0.0 && self.tol.abs > 0.0) {
            return Err(IntegratorError::InvalidSetting("tolerances must be positive"));
        }
        if !(t_end > t0) {
            return Err(IntegratorError::InvalidSetting("t_end must exceed t0"));
        }
        let mut stats = StepStats::default();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        stats.evaluations += 1;
        let mut h = self.initial_step.min(self.max_step).min(t_end - t0);

        while t < t_end {
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            let k2 = f(t + C[1] * h, &axpy(&y, h, &[(A2[0], &k1)]));
            let k3 = f(t + C[2] * h, &axpy(&y, h, &[(A3[0], &k1), (A3[1], &k2)]));
            let k4 = f(t + C[3] * h, &axpy(&y, h, &[(A4[0], &k1), (A4[1], &k2), (A4[2], &k3)]));
            let k5 = f(t + C[4] * h, &axpy(&y, h, &[(A5[0], &k1), (A5[1], &k2), (A5[2], &k3), (A5[3], &k4)]));
            let k6 = f(
                t + C[5] * h,
                &axpy(&y, h, &[(A6[0], &k1), (A6[1], &k2), (A6[2], &k3), (A6[3], &k4), (A6[4], &k5)]),
            );
            let y1 = axpy(&y, h, &[(B[0], &k1), (B[2], &k3), (B[3], &k4), (B[4], &k5), (B[5], &k6)]);
            let t1 = if last { t_end } else { t + h };
            let k7 = f(t1, &y1);
            stats.evaluations += 6;

            let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
            let mut acc = 0.0;
            for i in 0..N {
                let e: f64 = (0..7).map(|s| E[s] * ks[s][i]).sum::<f64>() * h;
                let scale = self.tol.abs + self.tol.rel * y[i].abs().max(y1[i].abs());
                acc += (e / scale).powi(2);
            }
            let err = (acc / N as f64).sqrt();
            if !err.is_finite() {
                return Err(IntegratorError::NonFinite(t));
            }

            if err <= 1.0 {
                let mut r = [[0.0; N]; 5];
                for i in 0..N {
                    let diff = y1[i] - y[i];
                    let bspl = h * k1[i] - diff;
                    r[0][i] = y[i];
                    r[1][i] = diff;
                    r[2][i] = bspl;
                    r[3][i] = diff - h * k7[i] - bspl;
                    r[4][i] = h * (0..7).map(|s| D[s] * ks[s][i]).sum::<f64>();
                }
                on_step(&DenseStep { t0: t, h: t1 - t, r });
                stats.accepted += 1;
                t = t1;
                y = y1;
                k1 = k7;
                let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
                h = (h * factor).min(self.max_step);
            } else {
                stats.rejected += 1;
                h *= (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            }
            if h < self.min_step && t < t_end && t_end - t > self.min_step {
                return Err(IntegratorError::StepCollapsed { t, h });
            }
        }
        Ok((y, stats))
    }
}

/// Classical fourth-order Runge-Kutta with a fixed step. `on_sample` sees
/// the state at `t0` and after every step.
pub fn rk4_fixed<const N: usize, F, S>(mut f: F, t0: f64, y0: [f64; N], t_end: f64, dt: f64, mut on_sample: S) -> [f64; N]
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    S: FnMut(f64, &[f64; N]),
{
    let steps = ((t_end - t0) / dt).round() as usize;
    let mut y = y0;
    on_sample(t0, &y);
    for n in 0..steps {
        let t = t0 + n as f64 * dt;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * dt, &axpy(&y, 0.5 * dt, &[(1.0, &k1)]));
        let k3 = f(t + 0.5 * dt, &axpy(&y, 0.5 * dt, &[(1.0, &k2)]));
        let k4 = f(t + dt, &axpy(&y, dt, &[(1.0, &k3)]));
        y = axpy(&y, dt / 6.0, &[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
        on_sample(t0 + (n + 1) as f64 * dt, &y);
    }
    y
}
