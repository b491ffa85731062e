use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::rng::RngSeed;

/// Ornstein–Uhlenbeck exploration noise,
/// `x ← x + θ·(μ − x)·dt + σ·√dt·N(0, 1)`.
#[derive(Debug, Clone)]
pub struct OuNoise {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub dt: f64,
    pub x: f64,
    rng: ChaCha8Rng,
}

impl OuNoise {
    pub fn new(theta: f64, mu: f64, sigma: f64, dt: f64, seed: RngSeed) -> Self {
        Self {
            theta,
            mu,
            sigma,
            dt,
            x: mu,
            rng: seed.rng(),
        }
    }

    /// Restarts the process at its mean.
    pub fn reset(&mut self) {
        self.x = self.mu;
    }

    pub fn sample(&mut self) -> f64 {
        let n: f64 = StandardNormal.sample(&mut self.rng);
        self.x += self.theta * (self.mu - self.x) * self.dt + self.sigma * self.dt.sqrt() * n;
        self.x
    }

    /// Stationary standard deviation of the discrete recursion,
    /// `σ·sqrt(dt / (2θ·dt − θ²·dt²))`.
    pub fn stationary_std(&self) -> f64 {
        let a = self.theta * self.dt;
        self.sigma * (self.dt / (2.0 * a - a * a)).sqrt()
    }
}
