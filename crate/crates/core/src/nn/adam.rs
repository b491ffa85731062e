use super::{GradientBundle, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    /// Keras defaults for everything but the learning rate.
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-7,
        }
    }
}

/// Adam moments for one network, flattened in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        let n = net.param_count();
        Self {
            config,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// One bias-corrected Adam step on `net` with the gradient of the loss
    /// being minimized.
    pub fn update(&mut self, net: &mut Mlp, grads: &GradientBundle) -> Result<()> {
        if grads.layers.len() != net.layers().len() {
            return Err(Error::Dimension {
                expected: net.layers().len(),
                got: grads.layers.len(),
            });
        }
        if self.m.len() != net.param_count() {
            return Err(Error::Dimension {
                expected: self.m.len(),
                got: net.param_count(),
            });
        }
        for (layer, g) in net.layers().iter().zip(&grads.layers) {
            if g.w.len() != layer.w.len() || g.b.len() != layer.b.len() {
                return Err(Error::Dimension {
                    expected: layer.w.len() + layer.b.len(),
                    got: g.w.len() + g.b.len(),
                });
            }
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let flat_grads = grads.layers.iter().flat_map(|l| l.w.iter().chain(&l.b));
        for (((p, g), m), v) in net
            .params_mut()
            .zip(flat_grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = flush(beta1 * *m + (1.0 - beta1) * g);
            *v = flush(beta2 * *v + (1.0 - beta2) * g * g);
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}

/// Moments of parameters whose gradient stays zero (dead ReLU units) decay
/// geometrically into the subnormal range, where arithmetic is very slow.
/// Below this magnitude their effect on a step is far below rounding.
const FLUSH_BELOW: f64 = 1e-150;

#[inline]
fn flush(x: f64) -> f64 {
    if x.abs() < FLUSH_BELOW {
        0.0
    } else {
        x
    }
}
