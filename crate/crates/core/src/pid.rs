//! PD control with a first-order filtered derivative,
//! `U(s) = (Kp + Kd·s / (1 + Tf·s))·E(s)`.
//!
//! The derivative path keeps the continuous filter pole `a = exp(-T/Tf)`.
//! After an error step the discrete output equals the continuous step
//! response `Kd/Tf·exp(-t/Tf)` at every later sample instant; the sample at
//! the step itself is sized so the whole response sums to `Kd/T`, which
//! makes the steady response to a ramp exactly `Kd·ė`. Sampling the
//! continuous response at the step too would overstate the derivative
//! several times over when `Tf < T`. Forward Euler is unstable there and the
//! bilinear map puts the pole at `(2Tf - T)/(2Tf + T) < 0`, which rings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdGains {
    pub kp: f64,
    pub kd: f64,
    /// Derivative filter time constant, s.
    pub tf: f64,
}

impl Default for PdGains {
    fn default() -> Self {
        Self {
            kp: 5.86,
            kd: 5.46,
            tf: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PdState {
    pub prev_error: f64,
    /// Output of the filtered derivative path.
    pub derivative: f64,
    /// Contribution of past error increments to the next derivative output.
    pub tail: f64,
}

/// Zeroed controller memory.
pub fn pd_reset(_gains: &PdGains) -> PdState {
    PdState::default()
}

/// One controller update with error `e` over sample interval `dt`.
pub fn pd_step(state: &mut PdState, e: f64, dt: f64, gains: &PdGains) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::domain(format!("dt must be > 0, got {dt}")));
    }
    if gains.tf < 0.0 {
        return Err(Error::domain("derivative filter time constant must be >= 0"));
    }
    let de = e - state.prev_error;
    let (a, g1) = if gains.tf > 0.0 {
        let a = (-dt / gains.tf).exp();
        (a, gains.kd / gains.tf * a)
    } else {
        // Unfiltered limit: backward difference.
        (0.0, 0.0)
    };
    let g0 = gains.kd / dt - if a > 0.0 { g1 / (1.0 - a) } else { 0.0 };
    state.derivative = g0 * de + state.tail;
    state.tail = a * state.tail + g1 * de;
    state.prev_error = e;
    Ok(gains.kp * e + state.derivative)
}

/// Stateful wrapper around [`pd_step`].
#[derive(Debug, Clone)]
pub struct PdController {
    pub gains: PdGains,
    state: PdState,
}

impl PdController {
    pub fn new(gains: PdGains) -> Self {
        Self {
            state: pd_reset(&gains),
            gains,
        }
    }

    pub fn reset(&mut self) {
        self.state = pd_reset(&self.gains);
    }

    pub fn state(&self) -> PdState {
        self.state
    }

    pub fn step(&mut self, e: f64, dt: f64) -> Result<f64> {
        pd_step(&mut self.state, e, dt, &self.gains)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DT: f64 = 0.1;

    /// Continuous-time oracle for a unit step applied at t = 0: the filter
    /// `Tf·ẇ = e - w` integrated by explicit Euler at 1e-5 s, with the
    /// derivative path equal to `Kd/Tf·(e - w)`.
    fn continuous_step_response(g: &PdGains, samples: usize) -> Vec<f64> {
        let h = 1e-5;
        let per_sample = (DT / h).round() as usize;
        let mut w = 0.0;
        let mut out = Vec::with_capacity(samples);
        for _ in 0..samples {
            out.push(g.kp + g.kd / g.tf * (1.0 - w));
            for _ in 0..per_sample {
                w += h / g.tf * (1.0 - w);
            }
        }
        out
    }

    #[test]
    fn zero_error_zero_output() {
        let mut c = PdController::new(PdGains::default());
        for _ in 0..10 {
            assert_eq!(c.step(0.0, DT).unwrap(), 0.0);
        }
    }

    #[test]
    fn proportional_only() {
        let g = PdGains { kd: 0.0, ..PdGains::default() };
        let mut s = pd_reset(&g);
        assert!((pd_step(&mut s, 2.0, DT, &g).unwrap() - 11.72).abs() < 1e-12);
    }

    #[test]
    fn step_response_matches_continuous_oracle() {
        let g = PdGains::default();
        let oracle = continuous_step_response(&g, 20);
        let mut c = PdController::new(g);
        for (k, expected) in oracle.iter().enumerate() {
            let u = c.step(1.0, DT).unwrap();
            if k > 0 {
                assert!((u - expected).abs() <= 0.05 * expected.abs(), "k={k}: {u} vs {expected}");
            }
        }
    }

    #[test]
    fn constant_error_settles_to_proportional_term() {
        let g = PdGains::default();
        let mut c = PdController::new(g);
        let e0 = 0.7;
        // From sample 1 on the derivative residual is Kd/Tf·e0·exp(-t/Tf),
        // below 1e-6 once t >= 20·Tf.
        let settle = (20.0 * g.tf / DT).ceil() as usize;
        let mut u = 0.0;
        for _ in 0..=settle {
            u = c.step(e0, DT).unwrap();
        }
        assert!((u - g.kp * e0).abs() < 1e-6, "u={u}");
    }

    #[test]
    fn ramp_settles_to_exact_derivative() {
        let g = PdGains::default();
        let mut c = PdController::new(g);
        let slope = 0.3;
        let mut u = 0.0;
        for k in 0..50 {
            let e = slope * DT * k as f64;
            u = c.step(e, DT).unwrap() - g.kp * e;
        }
        assert!((u - g.kd * slope).abs() < 1e-9, "derivative {u}");
    }

    #[test]
    fn output_is_linear_in_error() {
        let g = PdGains::default();
        let errors: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).sin() * 0.4).collect();
        let a = -3.2;
        let mut c1 = PdController::new(g);
        let mut c2 = PdController::new(g);
        for e in &errors {
            let u1 = c1.step(*e, DT).unwrap();
            let u2 = c2.step(a * e, DT).unwrap();
            assert!((u2 - a * u1).abs() <= 1e-12 * (a * u1).abs().max(1e-12));
        }
    }

    #[test]
    fn larger_filter_constant_attenuates_derivative() {
        let mut prev = f64::INFINITY;
        for tf in [0.01, 0.03, 0.1, 0.3, 1.0, 3.0] {
            let g = PdGains { tf, ..PdGains::default() };
            let mut s = pd_reset(&g);
            pd_step(&mut s, 1.0, DT, &g).unwrap();
            let d = s.derivative.abs();
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn reset_is_idempotent_and_deterministic() {
        let g = PdGains::default();
        assert_eq!(pd_reset(&g), pd_reset(&g));
        let mut c = PdController::new(g);
        c.step(1.0, DT).unwrap();
        c.reset();
        assert_eq!(c.step(0.0, DT).unwrap(), 0.0);
        let mut a = PdController::new(g);
        let mut b = PdController::new(g);
        for k in 0..30 {
            let e = (k as f64).cos();
            assert_eq!(a.step(e, DT).unwrap(), b.step(e, DT).unwrap());
        }
    }
}
