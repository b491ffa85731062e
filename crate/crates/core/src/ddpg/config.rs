use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Uniform ranges for the initial plant state `[x_p, Δp, ż_w, z_w]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitRanges(pub [(f64, f64); 4]);

impl Default for InitRanges {
    fn default() -> Self {
        InitRanges([(-1.0, 1.0), (-1e6, 1e6), (-0.1, 0.1), (0.0, 1.0)])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub gamma: f64,
    pub tau: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub a_low: f64,
    pub a_high: f64,
    pub episodes: usize,
    pub steps_per_episode: usize,
    /// Control interval, s.
    pub dt: f64,
    pub ou_theta: f64,
    pub ou_mu: f64,
    pub ou_sigma: f64,
    /// OU step size; 1 means one unit per control step.
    pub ou_dt: f64,
    pub init: InitRanges,
    pub actor_hidden: Vec<usize>,
    pub critic_state_width: usize,
    pub critic_action_width: usize,
    pub critic_hidden: Vec<usize>,
    /// Draw a fresh reference slice every episode instead of reusing one.
    pub resample_reference: bool,
    pub seed: RngSeed,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            gamma: 0.998,
            tau: 0.005,
            lr_actor: 0.001,
            lr_critic: 0.002,
            batch_size: 128,
            buffer_capacity: 50_000,
            a_low: -1.0,
            a_high: 1.0,
            episodes: 150,
            steps_per_episode: 3000,
            dt: 0.1,
            ou_theta: 0.15,
            ou_mu: 0.0,
            ou_sigma: 0.0005,
            ou_dt: 1.0,
            init: InitRanges::default(),
            actor_hidden: vec![256, 256],
            critic_state_width: 64,
            critic_action_width: 32,
            critic_hidden: vec![512],
            resample_reference: false,
            seed: RngSeed(0),
        }
    }
}

const INIT_NAMES: [&str; 4] = ["x_p", "delta_p", "zdot_w", "z_w"];

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::domain(m));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail(format!("gamma must be in (0, 1], got {}", self.gamma));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return fail(format!("tau must be in (0, 1], got {}", self.tau));
        }
        if self.batch_size == 0 || self.buffer_capacity == 0 {
            return fail("batch size and buffer capacity must be >= 1".into());
        }
        if !(self.a_low < self.a_high) {
            return fail(format!("need a_low < a_high, got [{}, {}]", self.a_low, self.a_high));
        }
        if self.episodes == 0 || self.steps_per_episode == 0 {
            return fail("episodes and steps per episode must be >= 1".into());
        }
        if !(self.dt > 0.0) || !(self.ou_dt > 0.0) {
            return fail("dt and ou_dt must be > 0".into());
        }
        if !(self.lr_actor > 0.0) || !(self.lr_critic > 0.0) {
            return fail("learning rates must be > 0".into());
        }
        for (name, (lo, hi)) in INIT_NAMES.iter().zip(self.init.0) {
            if !(lo <= hi) {
                return fail(format!("init range for {name} is empty: ({lo}, {hi})"));
            }
        }
        if self.actor_hidden.contains(&0)
            || self.critic_hidden.contains(&0)
            || self.critic_state_width == 0
            || self.critic_action_width == 0
        {
            return fail("network widths must be >= 1".into());
        }
        Ok(())
    }

    /// Every field as `(key, value)`; floats round-trip exactly.
    pub fn entries(&self) -> Vec<(String, String)> {
        let list = |v: &[usize]| v.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(",");
        let mut out: Vec<(String, String)> = vec![
            ("gamma".into(), format!("{:?}", self.gamma)),
            ("tau".into(), format!("{:?}", self.tau)),
            ("lr_actor".into(), format!("{:?}", self.lr_actor)),
            ("lr_critic".into(), format!("{:?}", self.lr_critic)),
            ("batch_size".into(), self.batch_size.to_string()),
            ("buffer_capacity".into(), self.buffer_capacity.to_string()),
            ("a_low".into(), format!("{:?}", self.a_low)),
            ("a_high".into(), format!("{:?}", self.a_high)),
            ("episodes".into(), self.episodes.to_string()),
            ("steps_per_episode".into(), self.steps_per_episode.to_string()),
            ("dt".into(), format!("{:?}", self.dt)),
            ("ou_theta".into(), format!("{:?}", self.ou_theta)),
            ("ou_mu".into(), format!("{:?}", self.ou_mu)),
            ("ou_sigma".into(), format!("{:?}", self.ou_sigma)),
            ("ou_dt".into(), format!("{:?}", self.ou_dt)),
        ];
        for (name, (lo, hi)) in INIT_NAMES.iter().zip(self.init.0) {
            out.push((format!("init_{name}"), format!("{lo:?},{hi:?}")));
        }
        out.extend([
            ("actor_hidden".into(), list(&self.actor_hidden)),
            ("critic_state_width".into(), self.critic_state_width.to_string()),
            ("critic_action_width".into(), self.critic_action_width.to_string()),
            ("critic_hidden".into(), list(&self.critic_hidden)),
            ("resample_reference".into(), self.resample_reference.to_string()),
            ("seed".into(), self.seed.0.to_string()),
        ]);
        out
    }

    /// Sets a field by the key used in [`AgentConfig::entries`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let f = || {
            value
                .parse::<f64>()
                .map_err(|_| Error::parse(format!("agent.{key}: cannot parse `{value}` as a number")))
        };
        let n = || {
            value
                .parse::<usize>()
                .map_err(|_| Error::parse(format!("agent.{key}: cannot parse `{value}` as a count")))
        };
        let list = || {
            value
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::parse(format!("agent.{key}: bad width `{s}`")))
                })
                .collect::<Result<Vec<_>>>()
        };
        match key {
            "gamma" => self.gamma = f()?,
            "tau" => self.tau = f()?,
            "lr_actor" => self.lr_actor = f()?,
            "lr_critic" => self.lr_critic = f()?,
            "batch_size" => self.batch_size = n()?,
            "buffer_capacity" => self.buffer_capacity = n()?,
            "a_low" => self.a_low = f()?,
            "a_high" => self.a_high = f()?,
            "episodes" => self.episodes = n()?,
            "steps_per_episode" => self.steps_per_episode = n()?,
            "dt" => self.dt = f()?,
            "ou_theta" => self.ou_theta = f()?,
            "ou_mu" => self.ou_mu = f()?,
            "ou_sigma" => self.ou_sigma = f()?,
            "ou_dt" => self.ou_dt = f()?,
            "actor_hidden" => self.actor_hidden = list()?,
            "critic_state_width" => self.critic_state_width = n()?,
            "critic_action_width" => self.critic_action_width = n()?,
            "critic_hidden" => self.critic_hidden = list()?,
            "resample_reference" => self.resample_reference = crate::plant::parse_bool(value)?,
            "seed" => {
                self.seed = RngSeed(
                    value
                        .parse()
                        .map_err(|_| Error::parse(format!("agent.seed: cannot parse `{value}`")))?,
                )
            }
            _ => {
                let idx = key
                    .strip_prefix("init_")
                    .and_then(|name| INIT_NAMES.iter().position(|n| *n == name))
                    .ok_or_else(|| Error::parse(format!("unknown agent key `{key}`")))?;
                let (lo, hi) = value
                    .split_once(',')
                    .ok_or_else(|| Error::parse(format!("agent.{key}: expected `lo,hi`")))?;
                let p = |s: &str| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::parse(format!("agent.{key}: bad bound `{s}`")))
                };
                self.init.0[idx] = (p(lo)?, p(hi)?);
            }
        }
        Ok(())
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = AgentConfig::default();
        for (k, v) in entries {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
