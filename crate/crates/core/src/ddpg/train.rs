use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Agent, AgentConfig, EnvConfig, HeaveEnv, Reference, ReplayBuffer, Transition};
use crate::error::{Error, Result};
use crate::plant::WinchState;

/// Episodes averaged in [`EpisodeLog::rolling_mean_30`].
pub const ROLLING_WINDOW: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeLog {
    /// 1-based.
    pub episode: usize,
    pub total_reward: f64,
    /// Mean total reward over the last (up to) 30 episodes.
    pub rolling_mean_30: f64,
}

/// Where each episode's reference comes from. With resampling off every
/// episode uses the slice at `start`; with it on, a uniformly random start.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSource {
    pub full: Reference,
    pub start: usize,
}

impl ReferenceSource {
    pub fn fixed(reference: Reference) -> Self {
        Self {
            full: reference,
            start: 0,
        }
    }

    pub fn episode(&self, len: usize, resample: bool, rng: &mut ChaCha8Rng) -> Result<Reference> {
        if self.full.len() < len {
            return Err(Error::domain(format!(
                "reference has {} samples, an episode needs {len}",
                self.full.len()
            )));
        }
        let start = if resample {
            rng.random_range(0..=self.full.len() - len)
        } else {
            self.start
        };
        self.full.slice(start, len)
    }
}

/// A training run that stopped early. `agent` holds the parameters at the
/// point of failure for a diagnostic checkpoint.
pub struct TrainAbort {
    pub error: Error,
    pub agent: Agent,
    pub logs: Vec<EpisodeLog>,
}

impl fmt::Debug for TrainAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TrainAbort")
            .field("error", &self.error)
            .field("episodes_logged", &self.logs.len())
            .finish()
    }
}

impl fmt::Display for TrainAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "training aborted after {} episodes: {}", self.logs.len(), self.error)
    }
}

impl std::error::Error for TrainAbort {}

/// A finished training run.
#[derive(Debug, Clone)]
pub struct Trained {
    pub agent: Agent,
    pub logs: Vec<EpisodeLog>,
    pub buffer: ReplayBuffer,
}

pub type TrainResult = std::result::Result<Trained, Box<TrainAbort>>;

pub fn train(env: &EnvConfig, cfg: &AgentConfig, reference: &ReferenceSource) -> TrainResult {
    train_with(env, cfg, reference, |_, _| {})
}

/// Runs DDPG for `cfg.episodes` episodes of `cfg.steps_per_episode` steps,
/// calling `observer` after each episode. The environment's control
/// interval is taken from `cfg.dt`.
pub fn train_with(
    env: &EnvConfig,
    cfg: &AgentConfig,
    reference: &ReferenceSource,
    mut observer: impl FnMut(&EpisodeLog, &Agent),
) -> TrainResult {
    let mut agent = match Agent::new(cfg.clone()) {
        Ok(a) => a,
        Err(error) => {
            return Err(Box::new(TrainAbort {
                error,
                agent: Agent::new(AgentConfig::default()).expect("default config is valid"),
                logs: Vec::new(),
            }))
        }
    };
    let mut logs = Vec::with_capacity(cfg.episodes);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    match run(env, cfg, reference, &mut agent, &mut buffer, &mut logs, &mut observer) {
        Ok(()) => Ok(Trained { agent, logs, buffer }),
        Err(error) => Err(Box::new(TrainAbort { error, agent, logs })),
    }
}

fn run(
    env_cfg: &EnvConfig,
    cfg: &AgentConfig,
    source: &ReferenceSource,
    agent: &mut Agent,
    buffer: &mut ReplayBuffer,
    logs: &mut Vec<EpisodeLog>,
    observer: &mut impl FnMut(&EpisodeLog, &Agent),
) -> Result<()> {
    let env_cfg = EnvConfig {
        dt: cfg.dt,
        ..env_cfg.clone()
    };
    let steps = cfg.steps_per_episode;
    let mut init_rng = cfg.seed.derive("env-init").rng();
    let mut ref_rng = cfg.seed.derive("reference").rng();
    let mut totals = Vec::with_capacity(cfg.episodes);

    for episode in 1..=cfg.episodes {
        let mut env = HeaveEnv::new(&env_cfg, source.episode(steps + 1, cfg.resample_reference, &mut ref_rng)?)?;
        let mut s = env.reset_random(&cfg.init, &mut init_rng);
        agent.noise.reset();
        let mut total = 0.0;
        for step in 0..steps {
            let u = agent.select_action(&s, true)?;
            let (s_next, r) = env.step(u)?;
            if !r.is_finite() || !s_next.is_finite() {
                return Err(Error::Diverged {
                    episode,
                    step,
                    reason: format!("non-finite transition (reward {r}, observation {s_next:?})"),
                });
            }
            buffer.push(Transition { s, u, r, s_next });
            total += r;
            if buffer.len() >= cfg.batch_size {
                let batch = agent.sample_batch(buffer);
                let loss = agent.critic_update(&batch)?;
                let q = agent.actor_update(&batch)?;
                if !loss.is_finite() || !q.is_finite() {
                    return Err(Error::Diverged {
                        episode,
                        step,
                        reason: format!("critic loss {loss}, mean Q {q}"),
                    });
                }
                agent.soft_update()?;
            }
            s = s_next;
        }
        if !agent.is_finite() {
            return Err(Error::Diverged {
                episode,
                step: steps,
                reason: "non-finite network parameters".into(),
            });
        }
        totals.push(total);
        let window = &totals[totals.len().saturating_sub(ROLLING_WINDOW)..];
        let log = EpisodeLog {
            episode,
            total_reward: total,
            rolling_mean_30: window.iter().sum::<f64>() / window.len() as f64,
        };
        logs.push(log);
        observer(&log, agent);
    }
    Ok(())
}

/// Total reward of one noise-free episode over the whole reference,
/// starting from `init`.
pub fn greedy_return(agent: &Agent, env: &EnvConfig, reference: Reference, init: WinchState) -> Result<f64> {
    let mut env = HeaveEnv::new(env, reference)?;
    let mut s = env.reset_to(init);
    let mut total = 0.0;
    for _ in 0..env.horizon() {
        let (s_next, r) = env.step(agent.greedy(&s)?)?;
        total += r;
        s = s_next;
    }
    Ok(total)
}
