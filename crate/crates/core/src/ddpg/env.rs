use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{reward, InitRanges, Observation};
use crate::error::{Error, Result};
use crate::plant::{measure, WinchParams, WinchPlant, WinchState};
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub params: WinchParams,
    pub gravity_bias: bool,
    /// Control interval, s.
    pub dt: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            params: WinchParams::default(),
            gravity_bias: false,
            dt: 0.1,
        }
    }
}

/// Net winch heave and its rate at the control instants.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub z: Vec<f64>,
    pub zdot: Vec<f64>,
}

impl Reference {
    pub fn new(z: Vec<f64>, zdot: Vec<f64>) -> Result<Self> {
        if z.len() != zdot.len() || z.is_empty() {
            return Err(Error::domain("reference heave and rate must be non-empty and equally long"));
        }
        Ok(Self { z, zdot })
    }

    pub fn from_series(z: &TimeSeries, zdot: &TimeSeries) -> Result<Self> {
        if !z.same_sampling(zdot) {
            return Err(Error::domain("reference heave and rate must share sampling"));
        }
        Self::new(z.values().to_vec(), zdot.values().to_vec())
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            z: vec![0.0; len],
            zdot: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn slice(&self, start: usize, len: usize) -> Result<Reference> {
        if start + len > self.len() || len == 0 {
            return Err(Error::domain(format!(
                "reference slice [{start}, {}) outside length {}",
                start + len,
                self.len()
            )));
        }
        Ok(Reference {
            z: self.z[start..start + len].to_vec(),
            zdot: self.zdot[start..start + len].to_vec(),
        })
    }
}

/// Closed-loop winch environment driven by a precomputed heave reference.
///
/// Step `t` uses reference sample `t`. Optional per-step sequences add an
/// offset to track, a disturbance on the rope acceleration, and additive
/// measurement noise on `z_w` and `ż_w` (observation only). Rewards always
/// use the true plant state.
#[derive(Debug, Clone)]
pub struct HeaveEnv {
    plant: WinchPlant,
    dt: f64,
    reference: Reference,
    offset: Option<Vec<f64>>,
    disturbance: Option<Vec<f64>>,
    noise: Option<(Vec<f64>, Vec<f64>)>,
    t: usize,
}

impl HeaveEnv {
    pub fn new(cfg: &EnvConfig, reference: Reference) -> Result<Self> {
        if !(cfg.dt > 0.0) {
            return Err(Error::domain(format!("control interval must be > 0, got {}", cfg.dt)));
        }
        Ok(Self {
            plant: WinchPlant::new(cfg.params)?.with_gravity_bias(cfg.gravity_bias),
            dt: cfg.dt,
            reference,
            offset: None,
            disturbance: None,
            noise: None,
            t: 0,
        })
    }

    fn check_len(&self, name: &str, v: &[f64]) -> Result<()> {
        if v.len() < self.reference.len() {
            return Err(Error::domain(format!(
                "{name} sequence has {} samples, reference has {}",
                v.len(),
                self.reference.len()
            )));
        }
        Ok(())
    }

    pub fn with_offset(mut self, offset: Vec<f64>) -> Result<Self> {
        self.check_len("offset", &offset)?;
        self.offset = Some(offset);
        Ok(self)
    }

    pub fn with_disturbance(mut self, d: Vec<f64>) -> Result<Self> {
        self.check_len("disturbance", &d)?;
        self.disturbance = Some(d);
        Ok(self)
    }

    pub fn with_measurement_noise(mut self, noise_z: Vec<f64>, noise_zdot: Vec<f64>) -> Result<Self> {
        self.check_len("noise", &noise_z)?;
        self.check_len("noise", &noise_zdot)?;
        self.noise = Some((noise_z, noise_zdot));
        Ok(self)
    }

    pub fn plant(&self) -> &WinchPlant {
        &self.plant
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    /// Number of steps available from t = 0.
    pub fn horizon(&self) -> usize {
        self.reference.len() - 1
    }

    pub fn offset_at(&self, t: usize) -> f64 {
        self.offset.as_ref().map_or(0.0, |o| o[t])
    }

    pub fn reset_to(&mut self, state: WinchState) -> Observation {
        self.plant.set_state(state);
        self.t = 0;
        self.observe()
    }

    /// Draws each plant state uniformly from its range.
    pub fn reset_random(&mut self, ranges: &InitRanges, rng: &mut ChaCha8Rng) -> Observation {
        let mut x = [0.0; 4];
        for (xi, (lo, hi)) in x.iter_mut().zip(ranges.0) {
            *xi = lo + (hi - lo) * rng.random::<f64>();
        }
        self.reset_to(WinchState::from_array(x))
    }

    /// Observation at the current step, including measurement noise.
    pub fn observe(&self) -> Observation {
        let t = self.t;
        let (nz, nzd) = self.noise.as_ref().map_or((0.0, 0.0), |(a, b)| (a[t], b[t]));
        let (z_w, zdot_w) = measure(&self.plant.state(), nz, nzd);
        Observation {
            z_w,
            zdot_w,
            z_winch: self.reference.z[t] - self.offset_at(t),
            zdot_winch: self.reference.zdot[t],
        }
    }

    /// True compensation error `|z_w + z_winch − offset|` and rate error
    /// `|ż_w + ż_winch|` at the current step.
    pub fn errors(&self) -> (f64, f64) {
        let s = self.plant.state();
        let t = self.t;
        (
            (s.z_w + self.reference.z[t] - self.offset_at(t)).abs(),
            (s.zdot_w + self.reference.zdot[t]).abs(),
        )
    }

    /// Applies `u_p` for one control interval and returns the next
    /// observation and its reward.
    pub fn step(&mut self, u_p: f64) -> Result<(Observation, f64)> {
        if self.t + 1 >= self.reference.len() {
            return Err(Error::domain(format!(
                "episode ran past the reference ({} samples)",
                self.reference.len()
            )));
        }
        if !u_p.is_finite() {
            return Err(Error::PlantFault(format!("non-finite action {u_p}")));
        }
        let d = self.disturbance.as_ref().map_or(0.0, |d| d[self.t]);
        self.plant.step(u_p, d, self.dt)?;
        self.t += 1;
        let (e_z, edot_z) = self.errors();
        Ok((self.observe(), reward(e_z, edot_z)))
    }
}
