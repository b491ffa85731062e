//! Two-branch critic: the observation passes a 64-wide layer, the action
//! a 32-wide layer, the two embeddings are concatenated and fed through a
//! 512-wide hidden layer to a linear scalar head.

use crate::error::Result;
use crate::nn::{init_mlp, init_mlp_with, Activation, GradientBundle, Matrix, Mlp, Tape, Wants};
use crate::rng::RngSeed;

use super::{AgentConfig, Observation};

#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub state: Mlp,
    pub action: Mlp,
    pub head: Mlp,
}

pub struct CriticTape {
    state: Tape,
    action: Tape,
    head: Tape,
}

impl CriticTape {
    /// Q values, one row per sample.
    pub fn q(&self) -> &Matrix {
        self.head.output()
    }
}

/// Gradients for each branch. `state.input` and `action.input` carry
/// ∂/∂s and ∂/∂u when requested.
#[derive(Debug, Clone)]
pub struct CriticGrads {
    pub state: GradientBundle,
    pub action: GradientBundle,
    pub head: GradientBundle,
}

impl Critic {
    pub fn init(cfg: &AgentConfig, seed: RngSeed) -> Result<Self> {
        let merged = cfg.critic_state_width + cfg.critic_action_width;
        let mut head_widths = vec![merged];
        head_widths.extend(&cfg.critic_hidden);
        head_widths.push(1);
        let mut head_acts = vec![Activation::Relu; cfg.critic_hidden.len()];
        head_acts.push(Activation::Linear);
        Ok(Self {
            state: init_mlp_with(
                &[Observation::WIDTH, cfg.critic_state_width],
                &[Activation::Relu],
                seed.derive("state"),
                false,
            )?,
            action: init_mlp_with(&[1, cfg.critic_action_width], &[Activation::Relu], seed.derive("action"), false)?,
            head: init_mlp(&head_widths, &head_acts, seed.derive("head"))?,
        })
    }

    pub fn nets(&self) -> [(&'static str, &Mlp); 3] {
        [("state", &self.state), ("action", &self.action), ("head", &self.head)]
    }

    pub fn is_finite(&self) -> bool {
        self.state.is_finite() && self.action.is_finite() && self.head.is_finite()
    }

    pub fn same_shape(&self, other: &Critic) -> bool {
        self.state.same_shape(&other.state) && self.action.same_shape(&other.action) && self.head.same_shape(&other.head)
    }

    pub fn forward(&self, s: &Observation, u: f64) -> Result<f64> {
        let tape = self.forward_batch(Matrix::from_row(s.to_array().to_vec()), Matrix::from_row(vec![u]))?;
        Ok(tape.q().get(0, 0))
    }

    pub fn forward_batch(&self, s: Matrix, u: Matrix) -> Result<CriticTape> {
        let state = self.state.forward_batch(s)?;
        let action = self.action.forward_batch(u)?;
        let merged = state.output().hcat(action.output())?;
        let head = self.head.forward_batch(merged)?;
        Ok(CriticTape { state, action, head })
    }

    pub fn backward_batch(&self, tape: &CriticTape, upstream: &Matrix, wants: Wants) -> Result<CriticGrads> {
        let head = self.head.backward_batch(
            &tape.head,
            upstream,
            Wants {
                params: wants.params,
                input: true,
            },
        )?;
        let (d_state, d_action) = head.input.hsplit(self.state.output_width());
        let state = self.state.backward_batch(&tape.state, &d_state, wants)?;
        let action = self.action.backward_batch(&tape.action, &d_action, wants)?;
        Ok(CriticGrads { state, action, head })
    }

    pub fn soft_update_from(&mut self, main: &Critic, tau: f64) -> Result<()> {
        self.state.soft_update_from(&main.state, tau)?;
        self.action.soft_update_from(&main.action, tau)?;
        self.head.soft_update_from(&main.head, tau)
    }
}
