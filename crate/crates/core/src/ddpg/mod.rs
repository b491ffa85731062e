//! Deep deterministic policy gradient for winch control.
//!
//! The agent observes `(z_w, ż_w, z_winch, ż_winch)`, commands the pump
//! swash angle `u_p ∈ [a_low, a_high]` every control step and is rewarded
//! for keeping the compensated motion `z_w + z_winch` and its rate small.
//! Training follows the usual DDPG recipe: replay buffer, OU exploration,
//! critic regression on bootstrapped TD targets from slowly tracking target
//! networks, deterministic policy gradient for the actor.

mod agent;
mod config;
mod critic;
mod env;
mod noise;
mod replay;
mod train;

pub use agent::{Agent, CriticOptimizer};
pub use config::{AgentConfig, InitRanges};
pub use critic::{Critic, CriticGrads, CriticTape};
pub use env::{EnvConfig, HeaveEnv, Reference};
pub use noise::OuNoise;
pub use replay::{ReplayBuffer, TransitionBatch};
pub use train::{
    greedy_return, train, train_with, EpisodeLog, ReferenceSource, TrainAbort, TrainResult, Trained, ROLLING_WINDOW,
};

/// Agent observation. `z_winch` is measured relative to the commanded
/// offset, so `z_w + z_winch = 0` is perfect tracking.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observation {
    pub z_w: f64,
    pub zdot_w: f64,
    pub z_winch: f64,
    pub zdot_winch: f64,
}

impl Observation {
    pub const WIDTH: usize = 4;

    pub fn to_array(self) -> [f64; 4] {
        [self.z_w, self.zdot_w, self.z_winch, self.zdot_winch]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            z_w: v[0],
            zdot_w: v[1],
            z_winch: v[2],
            zdot_winch: v[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// Compensation error as the controllers see it, `-(z_w + z_winch)`.
    pub fn tracking_error(&self) -> f64 {
        -(self.z_w + self.z_winch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub s: Observation,
    pub u: f64,
    pub r: f64,
    pub s_next: Observation,
}

/// Threshold on `e_z` (m) separating the two reward regimes.
pub const REWARD_BAND: f64 = 0.05;

/// Reward for absolute compensation error `e_z` (m) and its rate `edot_z`
/// (m/s). Inside the band, `1 - 20·e_z - ė_z`; outside, `-10·e_z - 2·ė_z`.
/// The boundary `e_z = 0.05` belongs to the inner branch.
pub fn reward(e_z: f64, edot_z: f64) -> f64 {
    if e_z <= REWARD_BAND {
        1.0 - 20.0 * e_z - edot_z
    } else {
        -10.0 * e_z - 2.0 * edot_z
    }
}
