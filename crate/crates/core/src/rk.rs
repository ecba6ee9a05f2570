//! Embedded Dormand–Prince 5(4) stepper for complex linear systems.

use num_complex::Complex64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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

// fifth-order solution minus embedded fourth-order solution
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepUnderflow {
    pub t: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Adaptive integrator state carried across output segments.
pub(crate) struct DormandPrince {
    tol: f64,
    max_step: f64,
    h: f64,
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
    fsal_valid: bool,
    pub stats: StepStats,
}

impl DormandPrince {
    pub fn new(dim: usize, tol: f64, max_step: f64) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        DormandPrince {
            tol,
            max_step,
            h: max_step,
            k: std::array::from_fn(|_| z.clone()),
            stage: z.clone(),
            y_new: z,
            fsal_valid: false,
            stats: StepStats::default(),
        }
    }

    /// Advances `y` from `t0` to exactly `t1` (either direction).
    pub fn advance<F>(&mut self, rhs: &mut F, t0: f64, t1: f64, y: &mut [Complex64]) -> Result<(), StepUnderflow>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut t = t0;
        if !self.fsal_valid {
            rhs(t, y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                return Ok(());
            }
            let mut h = self.h.min(self.max_step);
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let hs = h * dir;
            let err = self.trial(rhs, t, hs, y);
            if err <= 1.0 {
                self.stats.accepted += 1;
                t = if last { t1 } else { t + hs };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                let factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
                // a step shortened to hit the output time should not shrink the next one
                if !last || factor > 1.0 {
                    self.h = (h * factor).min(self.max_step);
                }
                if last {
                    return Ok(());
                }
            } else {
                self.stats.rejected += 1;
                let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
                self.h = h * factor;
                if !err.is_finite() {
                    self.h = h * MIN_FACTOR;
                }
                if self.h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(StepUnderflow { t, h: self.h });
                }
            }
        }
    }

    /// One trial step; returns the scaled error norm and leaves the candidate
    /// in `y_new` and its derivative in `k[6]`.
    fn trial<F>(&mut self, rhs: &mut F, t: f64, h: f64, y: &[Complex64]) -> f64
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
    {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let stage = &mut self.stage;

        for i in 0..n {
            stage[i] = y[i] + k1[i] * (h * A21);
        }
        rhs(t + C2 * h, stage, k2);
        for i in 0..n {
            stage[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        rhs(t + C3 * h, stage, k3);
        for i in 0..n {
            stage[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        rhs(t + C4 * h, stage, k4);
        for i in 0..n {
            stage[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        rhs(t + C5 * h, stage, k5);
        for i in 0..n {
            stage[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        rhs(t + h, stage, k6);
        let y_new = &mut self.y_new;
        for i in 0..n {
            y_new[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        rhs(t + h, y_new, k7);

        let mut acc = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let scale = self.tol * (1.0 + y[i].norm().max(y_new[i].norm()));
            acc += (e.norm() / scale).powi(2);
        }
        (acc / n as f64).sqrt()
    }
}
