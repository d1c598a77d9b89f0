//! Adaptive Dormand-Prince 5(4) integrator for complex-valued linear ODEs.
//!
//! The stepper works on flat `C64` slices so the same code drives both the
//! two-level propagation and the dense 2^N state vector of the oracle. Error
//! control is the usual mixed absolute/relative max-norm; the fifth-order
//! solution is propagated (local extrapolation) and FSAL is exploited.

use num_complex::Complex64 as C64;

// Butcher tableau
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

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Failure modes of the stepper. Callers attach physical context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeFailure {
    /// The controller asked for a step below the resolution of `t`.
    StepUnderflow { t: f64 },
    /// `max_steps` accepted+rejected steps were exhausted before reaching the end.
    StepBudget { t: f64 },
}

/// Counters from one integration run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DormandPrince {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for DormandPrince {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12, max_steps: 50_000_000 }
    }
}

impl DormandPrince {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    /// Integrates `dy/dt = rhs(t, y)` from `t0` to `t1` in place. Either
    /// direction is allowed; `t0 == t1` leaves `y` untouched.
    pub fn integrate<F>(
        &self,
        mut rhs: F,
        t0: f64,
        t1: f64,
        y: &mut [C64],
    ) -> Result<OdeStats, OdeFailure>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let mut stats = OdeStats::default();
        if t0 == t1 {
            return Ok(stats);
        }
        let n = y.len();
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();

        let mut k1 = vec![C64::default(); n];
        let mut k2 = vec![C64::default(); n];
        let mut k3 = vec![C64::default(); n];
        let mut k4 = vec![C64::default(); n];
        let mut k5 = vec![C64::default(); n];
        let mut k6 = vec![C64::default(); n];
        let mut k7 = vec![C64::default(); n];
        let mut stage = vec![C64::default(); n];
        let mut y_new = vec![C64::default(); n];

        let mut t = t0;
        rhs(t, y, &mut k1);
        stats.evaluations += 1;

        let mut h = self.initial_step(&mut rhs, t, y, &k1, dir, span, &mut stage, &mut k2);
        stats.evaluations += 1;

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(OdeFailure::StepBudget { t });
            }
            let remaining = (t1 - t).abs();
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            if h <= 16.0 * f64::EPSILON * t.abs().max(span) {
                return Err(OdeFailure::StepUnderflow { t });
            }
            let hs = dir * h;

            for i in 0..n {
                stage[i] = y[i] + hs * (A21 * k1[i]);
            }
            rhs(t + C2 * hs, &stage, &mut k2);
            for i in 0..n {
                stage[i] = y[i] + hs * (A31 * k1[i] + A32 * k2[i]);
            }
            rhs(t + C3 * hs, &stage, &mut k3);
            for i in 0..n {
                stage[i] = y[i] + hs * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            rhs(t + C4 * hs, &stage, &mut k4);
            for i in 0..n {
                stage[i] =
                    y[i] + hs * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            rhs(t + C5 * hs, &stage, &mut k5);
            for i in 0..n {
                stage[i] = y[i]
                    + hs * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_next = if last { t1 } else { t + hs };
            rhs(t_next, &stage, &mut k6);
            for i in 0..n {
                y_new[i] = y[i]
                    + hs * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            rhs(t_next, &y_new, &mut k7);
            stats.evaluations += 6;

            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let scale = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                err = err.max(e.norm() / scale);
            }

            if err <= 1.0 {
                stats.accepted += 1;
                t = t_next;
                y.copy_from_slice(&y_new);
                std::mem::swap(&mut k1, &mut k7);
                if last {
                    return Ok(stats);
                }
                let factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                h *= factor;
            } else {
                stats.rejected += 1;
                h *= (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            }
        }
    }

    // Hairer-Norsett-Wanner starting step heuristic.
    #[allow(clippy::too_many_arguments)]
    fn initial_step<F>(
        &self,
        rhs: &mut F,
        t: f64,
        y: &[C64],
        f0: &[C64],
        dir: f64,
        span: f64,
        scratch: &mut [C64],
        f1: &mut [C64],
    ) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let scale = |v: C64| self.atol + self.rtol * v.norm();
        let rms = |num: &dyn Fn(usize) -> f64| -> f64 {
            let s: f64 = (0..y.len()).map(|i| num(i).powi(2)).sum();
            (s / y.len() as f64).sqrt()
        };
        let d0 = rms(&|i| y[i].norm() / scale(y[i]));
        let d1 = rms(&|i| f0[i].norm() / scale(y[i]));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for i in 0..y.len() {
            scratch[i] = y[i] + dir * h0 * f0[i];
        }
        rhs(t + dir * h0, scratch, f1);
        let d2 = rms(&|i| (f1[i] - f0[i]).norm() / scale(y[i])) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_phase_matches_closed_form() {
        // dy/dt = -i w y  =>  y(t) = exp(-i w t)
        let w = 3.7;
        let mut y = [C64::new(1.0, 0.0)];
        DormandPrince::default()
            .integrate(|_, y, dy| dy[0] = C64::new(0.0, -w) * y[0], 0.0, 10.0, &mut y)
            .unwrap();
        let exact = C64::from_polar(1.0, -w * 10.0);
        assert!((y[0] - exact).norm() < 1e-8, "{:?} vs {:?}", y[0], exact);
    }

    #[test]
    fn backward_integration_inverts_forward() {
        let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
            dy[0] = C64::new(0.0, -t) * y[0] + C64::new(0.0, -0.5) * y[1];
            dy[1] = C64::new(0.0, -0.5) * y[0] + C64::new(0.0, t) * y[1];
        };
        let start = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let mut y = start;
        let stepper = DormandPrince::default();
        stepper.integrate(rhs, -3.0, 4.0, &mut y).unwrap();
        stepper.integrate(rhs, 4.0, -3.0, &mut y).unwrap();
        for (a, b) in y.iter().zip(start.iter()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn zero_span_is_identity() {
        let mut y = [C64::new(0.3, 0.4)];
        let stats = DormandPrince::default()
            .integrate(|_, _, _| panic!("rhs must not be called"), 2.0, 2.0, &mut y)
            .unwrap();
        assert_eq!(stats.evaluations, 0);
        assert_eq!(y[0], C64::new(0.3, 0.4));
    }

    #[test]
    fn fifth_order_convergence() {
        // dy/dt = cos(t) y has y = exp(sin t); halving a fixed step must cut the
        // error by about 2^5 once the controller is pinned by a tiny budget.
        let exact = (2.0f64).sin().exp();
        let run = |rtol: f64| {
            let mut y = [C64::new(1.0, 0.0)];
            let s = DormandPrince::new(rtol, 0.0)
                .integrate(|t, y, dy| dy[0] = t.cos() * y[0], 0.0, 2.0, &mut y)
                .unwrap();
            ((y[0].re - exact).abs(), s.accepted)
        };
        let (e_coarse, _) = run(1e-6);
        let (e_fine, _) = run(1e-11);
        assert!(e_coarse < 1e-5);
        assert!(e_fine < 1e-10);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let mut y = [C64::new(1.0, 0.0)];
        let stepper = DormandPrince { max_steps: 3, ..DormandPrince::default() };
        let err = stepper
            .integrate(|_, y, dy| dy[0] = C64::new(0.0, -1000.0) * y[0], 0.0, 100.0, &mut y)
            .unwrap_err();
        assert!(matches!(err, OdeFailure::StepBudget { .. }));
    }
}
