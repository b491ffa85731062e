use rand_chacha::ChaCha8Rng;

use super::{AgentConfig, Critic, CriticGrads, Observation, OuNoise, ReplayBuffer, TransitionBatch};
use crate::error::{Error, Result};
use crate::nn::{init_mlp, Activation, AdamConfig, AdamState, Checkpoint, GradientBundle, Matrix, Mlp, Wants};

/// Adam states for the three critic sub-networks.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticOptimizer {
    pub state: AdamState,
    pub action: AdamState,
    pub head: AdamState,
}

impl CriticOptimizer {
    pub fn new(critic: &Critic, config: AdamConfig) -> Self {
        Self {
            state: AdamState::new(&critic.state, config),
            action: AdamState::new(&critic.action, config),
            head: AdamState::new(&critic.head, config),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub config: AgentConfig,
    pub actor: Mlp,
    pub critic: Critic,
    pub target_actor: Mlp,
    pub target_critic: Critic,
    pub actor_opt: AdamState,
    pub critic_opt: CriticOptimizer,
    pub noise: OuNoise,
    minibatch_rng: ChaCha8Rng,
}

impl Agent {
    /// Fresh agent; targets start as copies of the main networks.
    pub fn new(config: AgentConfig) -> Result<Self> {
        config.validate()?;
        let seed = config.seed;
        let mut widths = vec![Observation::WIDTH];
        widths.extend(&config.actor_hidden);
        widths.push(1);
        let mut acts = vec![Activation::Relu; config.actor_hidden.len()];
        acts.push(Activation::Tanh);
        let actor = init_mlp(&widths, &acts, seed.derive("actor"))?;
        let critic = Critic::init(&config, seed.derive("critic"))?;
        Ok(Self {
            actor_opt: AdamState::new(&actor, AdamConfig::with_lr(config.lr_actor)),
            critic_opt: CriticOptimizer::new(&critic, AdamConfig::with_lr(config.lr_critic)),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            noise: OuNoise::new(
                config.ou_theta,
                config.ou_mu,
                config.ou_sigma,
                config.ou_dt,
                seed.derive("ou"),
            ),
            minibatch_rng: seed.derive("minibatch").rng(),
            config,
        })
    }

    /// Replaces the actor and critic (and their targets), resetting the
    /// optimizers. Shapes need not match the config widths.
    pub fn with_networks(mut self, actor: Mlp, critic: Critic) -> Result<Self> {
        if actor.input_width() != Observation::WIDTH || actor.output_width() != 1 {
            return Err(Error::domain("actor must map 4 inputs to 1 output"));
        }
        self.actor_opt = AdamState::new(&actor, AdamConfig::with_lr(self.config.lr_actor));
        self.critic_opt = CriticOptimizer::new(&critic, AdamConfig::with_lr(self.config.lr_critic));
        self.target_actor = actor.clone();
        self.target_critic = critic.clone();
        self.actor = actor;
        self.critic = critic;
        Ok(self)
    }

    pub fn clip(&self, u: f64) -> f64 {
        u.clamp(self.config.a_low, self.config.a_high)
    }

    /// Deterministic policy output, clipped.
    pub fn greedy(&self, s: &Observation) -> Result<f64> {
        Ok(self.clip(self.actor.forward(&s.to_array())?[0]))
    }

    /// `μ(s)` plus an OU sample when exploring, clipped to the action bounds.
    pub fn select_action(&mut self, s: &Observation, explore: bool) -> Result<f64> {
        let mu = self.actor.forward(&s.to_array())?[0];
        let noise = if explore { self.noise.sample() } else { 0.0 };
        Ok(self.clip(mu + noise))
    }

    pub fn sample_batch(&mut self, buffer: &ReplayBuffer) -> TransitionBatch {
        buffer.sample(self.config.batch_size, &mut self.minibatch_rng)
    }

    /// `y_i = r_i + γ·Q′(s_{i+1}, μ′(s_{i+1}))`.
    pub fn td_targets(&self, batch: &TransitionBatch) -> Result<Vec<f64>> {
        let u_next = self.target_actor.forward_batch(batch.s_next.clone())?.into_output();
        let q_next = self.target_critic.forward_batch(batch.s_next.clone(), u_next)?;
        Ok(batch
            .r
            .iter()
            .zip(q_next.q().data())
            .map(|(r, q)| r + self.config.gamma * q)
            .collect())
    }

    /// Mean squared TD error and its gradient with respect to the critic.
    pub fn critic_gradient(&self, batch: &TransitionBatch) -> Result<(f64, CriticGrads)> {
        let y = self.td_targets(batch)?;
        let n = y.len();
        if n == 0 {
            return Err(Error::domain("empty minibatch"));
        }
        let tape = self.critic.forward_batch(batch.s.clone(), batch.u.clone())?;
        let mut loss = 0.0;
        let mut dq = Vec::with_capacity(n);
        for (q, y) in tape.q().data().iter().zip(&y) {
            let e = q - y;
            loss += e * e;
            dq.push(2.0 * e / n as f64);
        }
        let grads = self
            .critic
            .backward_batch(&tape, &Matrix::from_vec(n, 1, dq)?, Wants::PARAMS)?;
        Ok((loss / n as f64, grads))
    }

    /// One Adam step on the mean squared TD error. Returns the loss before
    /// the step.
    pub fn critic_update(&mut self, batch: &TransitionBatch) -> Result<f64> {
        let (loss, grads) = self.critic_gradient(batch)?;
        self.critic_opt.state.update(&mut self.critic.state, &grads.state)?;
        self.critic_opt.action.update(&mut self.critic.action, &grads.action)?;
        self.critic_opt.head.update(&mut self.critic.head, &grads.head)?;
        Ok(loss)
    }

    /// `J = mean Q(s, μ(s))` over the batch and the gradient of `−J` with
    /// respect to the actor parameters.
    pub fn actor_gradient(&self, batch: &TransitionBatch) -> Result<(f64, GradientBundle)> {
        let n = batch.s.rows();
        if n == 0 {
            return Err(Error::domain("empty minibatch"));
        }
        let actor_tape = self.actor.forward_batch(batch.s.clone())?;
        let critic_tape = self
            .critic
            .forward_batch(batch.s.clone(), actor_tape.output().clone())?;
        let mean_q = critic_tape.q().data().iter().sum::<f64>() / n as f64;
        let upstream = Matrix::from_vec(n, 1, vec![-1.0 / n as f64; n])?;
        let cg = self.critic.backward_batch(&critic_tape, &upstream, Wants::INPUT)?;
        let grads = self.actor.backward_batch(&actor_tape, &cg.action.input, Wants::PARAMS)?;
        Ok((mean_q, grads))
    }

    /// One deterministic policy-gradient ascent step on `J`. Returns `J`
    /// before the step.
    pub fn actor_update(&mut self, batch: &TransitionBatch) -> Result<f64> {
        let (mean_q, grads) = self.actor_gradient(batch)?;
        self.actor_opt.update(&mut self.actor, &grads)?;
        Ok(mean_q)
    }

    pub fn soft_update(&mut self) -> Result<()> {
        let tau = self.config.tau;
        self.target_actor.soft_update_from(&self.actor, tau)?;
        self.target_critic.soft_update_from(&self.critic, tau)
    }

    pub fn is_finite(&self) -> bool {
        self.actor.is_finite()
            && self.critic.is_finite()
            && self.target_actor.is_finite()
            && self.target_critic.is_finite()
    }

    /// All four networks, optimizer moments, OU state and the config.
    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::default();
        ck.meta.push(("kind".into(), "ddpg-agent".into()));
        for (k, v) in self.config.entries() {
            ck.meta.push((format!("agent.{k}"), v));
        }
        ck.nets.push(("actor".into(), self.actor.clone()));
        ck.nets.push(("target_actor".into(), self.target_actor.clone()));
        for (prefix, critic) in [("critic", &self.critic), ("target_critic", &self.target_critic)] {
            for (part, net) in critic.nets() {
                ck.nets.push((format!("{prefix}_{part}"), net.clone()));
            }
        }
        let opts = [
            ("actor", &self.actor_opt),
            ("critic_state", &self.critic_opt.state),
            ("critic_action", &self.critic_opt.action),
            ("critic_head", &self.critic_opt.head),
        ];
        for (name, opt) in opts {
            ck.meta.push((format!("adam.{name}.t"), opt.t.to_string()));
            ck.blobs.push((format!("adam_m_{name}"), opt.m.clone()));
            ck.blobs.push((format!("adam_v_{name}"), opt.v.clone()));
        }
        ck.blobs.push(("ou_x".into(), vec![self.noise.x]));
        ck
    }

    /// Rebuilds an agent from [`Agent::to_checkpoint`] output. The minibatch
    /// and noise generators restart from the stored seed.
    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let cfg_entries: Vec<(&str, &str)> = ck
            .meta
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("agent.").map(|k| (k, v.as_str())))
            .collect();
        let config = AgentConfig::from_entries(cfg_entries)?;
        let net = |name: &str| {
            ck.net(name)
                .cloned()
                .ok_or_else(|| Error::parse(format!("checkpoint lacks network `{name}`")))
        };
        let critic = |prefix: &str| -> Result<Critic> {
            Ok(Critic {
                state: net(&format!("{prefix}_state"))?,
                action: net(&format!("{prefix}_action"))?,
                head: net(&format!("{prefix}_head"))?,
            })
        };
        let mut agent = Agent::new(config)?.with_networks(net("actor")?, critic("critic")?)?;
        agent.target_actor = net("target_actor")?;
        agent.target_critic = critic("target_critic")?;
        if !agent.target_actor.same_shape(&agent.actor) || !agent.target_critic.same_shape(&agent.critic) {
            return Err(Error::parse("target network shapes differ from main networks"));
        }
        let restore = |name: &str, opt: &mut AdamState| -> Result<()> {
            let t = ck.meta(&format!("adam.{name}.t")).unwrap_or("0");
            opt.t = t
                .parse()
                .map_err(|_| Error::parse(format!("bad Adam step count `{t}`")))?;
            for (which, dst) in [("m", &mut opt.m), ("v", &mut opt.v)] {
                if let Some(b) = ck.blob(&format!("adam_{which}_{name}")) {
                    if b.len() != dst.len() {
                        return Err(Error::Dimension {
                            expected: dst.len(),
                            got: b.len(),
                        });
                    }
                    dst.copy_from_slice(b);
                }
            }
            Ok(())
        };
        restore("actor", &mut agent.actor_opt)?;
        restore("critic_state", &mut agent.critic_opt.state)?;
        restore("critic_action", &mut agent.critic_opt.action)?;
        restore("critic_head", &mut agent.critic_opt.head)?;
        if let Some([x]) = ck.blob("ou_x") {
            agent.noise.x = *x;
        }
        Ok(agent)
    }
}
