//! A small dense network engine: batched forward and reverse-mode passes,
//! Adam, deterministic initialization and a binary checkpoint container.
//!
//! Weights of a layer are stored `n_out × n_in` row-major. Batches are
//! row-major matrices with one sample per row. Matrix products go through
//! `matrixmultiply`.

mod adam;
mod checkpoint;
mod matrix;

use rand::Rng;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use matrix::Matrix;

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Half-width of the uniform initialization of the output layer.
pub const FINAL_LAYER_INIT: f64 = 3e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::parse(format!("unknown activation `{other}`"))),
        }
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    n_in: usize,
    n_out: usize,
    /// `n_out × n_in`, row-major.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn new(n_in: usize, n_out: usize, w: Vec<f64>, b: Vec<f64>, activation: Activation) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return Err(Error::domain("layer widths must be >= 1"));
        }
        if w.len() != n_in * n_out {
            return Err(Error::Dimension {
                expected: n_in * n_out,
                got: w.len(),
            });
        }
        if b.len() != n_out {
            return Err(Error::Dimension {
                expected: n_out,
                got: b.len(),
            });
        }
        Ok(Self {
            n_in,
            n_out,
            w,
            b,
            activation,
        })
    }

    pub fn zeros(n_in: usize, n_out: usize, activation: Activation) -> Self {
        Self {
            n_in,
            n_out,
            w: vec![0.0; n_in * n_out],
            b: vec![0.0; n_out],
            activation,
        }
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.w[out * self.n_in + inp]
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        let mut z = Matrix::zeros(x.rows(), self.n_out);
        // Z = X·Wᵀ
        matrix::gemm(
            x.rows(),
            self.n_in,
            self.n_out,
            1.0,
            (x.data(), self.n_in as isize, 1),
            (&self.w, 1, self.n_in as isize),
            0.0,
            (z.data_mut(), self.n_out as isize, 1),
        );
        let act = self.activation;
        for row in z.data_mut().chunks_exact_mut(self.n_out) {
            for (v, b) in row.iter_mut().zip(&self.b) {
                *v = act.apply(*v + b);
            }
        }
        z
    }
}

/// Per-layer parameter gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// Parameter gradients for every layer plus the gradient with respect to
/// the network input (one row per sample).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGrad>,
    pub input: Matrix,
}

impl GradientBundle {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad {
                    w: vec![0.0; l.w.len()],
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
            input: Matrix::zeros(0, net.input_width()),
        }
    }

    /// Flattened parameter gradients in checkpoint order.
    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(&l.b).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(&l.b).all(|v| v.is_finite()))
    }
}

/// Activations recorded by [`Mlp::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    input: Matrix,
    outputs: Vec<Matrix>,
}

impl Tape {
    pub fn input(&self) -> &Matrix {
        &self.input
    }

    pub fn output(&self) -> &Matrix {
        self.outputs.last().expect("network has at least one layer")
    }

    pub fn into_output(mut self) -> Matrix {
        self.outputs.pop().expect("network has at least one layer")
    }
}

/// Which gradients a backward pass should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wants {
    pub params: bool,
    pub input: bool,
}

impl Wants {
    pub const ALL: Wants = Wants {
        params: true,
        input: true,
    };
    pub const PARAMS: Wants = Wants {
        params: true,
        input: false,
    };
    pub const INPUT: Wants = Wants {
        params: false,
        input: true,
    };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    pub fn new(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::domain("a network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].n_out != pair[1].n_in {
                return Err(Error::Dimension {
                    expected: pair[0].n_out,
                    got: pair[1].n_in,
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.input_width())
            .chain(self.layers.iter().map(|l| l.n_out))
            .collect()
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Parameters in checkpoint order: per layer, weights then biases.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|v| v.is_finite())
    }

    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.widths() == other.widths() && self.activations() == other.activations()
    }

    /// Single-sample forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let tape = self.forward_batch(Matrix::from_row(x.to_vec()))?;
        Ok(tape.into_output().into_data())
    }

    pub fn forward_batch(&self, x: Matrix) -> Result<Tape> {
        if x.cols() != self.input_width() {
            return Err(Error::Dimension {
                expected: self.input_width(),
                got: x.cols(),
            });
        }
        let mut outputs: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let out = layer.forward(outputs.last().unwrap_or(&x));
            outputs.push(out);
        }
        Ok(Tape { input: x, outputs })
    }

    /// Single-sample reverse pass: gradients of `upstream · y(x)`.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<GradientBundle> {
        let tape = self.forward_batch(Matrix::from_row(x.to_vec()))?;
        self.backward_batch(&tape, &Matrix::from_row(upstream.to_vec()), Wants::ALL)
    }

    /// Reverse pass over a recorded batch. Parameter gradients are summed
    /// over the batch; the input gradient has one row per sample.
    pub fn backward_batch(&self, tape: &Tape, upstream: &Matrix, wants: Wants) -> Result<GradientBundle> {
        let batch = tape.input.rows();
        if upstream.rows() != batch || upstream.cols() != self.output_width() {
            return Err(Error::Dimension {
                expected: batch * self.output_width(),
                got: upstream.rows() * upstream.cols(),
            });
        }
        let mut grads: Vec<LayerGrad> = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.clone();
        let mut input_grad = Matrix::zeros(0, self.input_width());
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let out = &tape.outputs[i];
            for (d, y) in delta.data_mut().iter_mut().zip(out.data()) {
                *d *= layer.activation.grad_from_output(*y);
            }
            let x = if i == 0 { &tape.input } else { &tape.outputs[i - 1] };
            let mut gw = Vec::new();
            let mut gb = Vec::new();
            if wants.params {
                gw = vec![0.0; layer.w.len()];
                // dW = δᵀ·X
                matrix::gemm(
                    layer.n_out,
                    batch,
                    layer.n_in,
                    1.0,
                    (delta.data(), 1, layer.n_out as isize),
                    (x.data(), layer.n_in as isize, 1),
                    0.0,
                    (&mut gw, layer.n_in as isize, 1),
                );
                gb = vec![0.0; layer.n_out];
                for row in delta.data().chunks_exact(layer.n_out) {
                    for (g, d) in gb.iter_mut().zip(row) {
                        *g += d;
                    }
                }
            }
            grads.push(LayerGrad { w: gw, b: gb });
            if i > 0 || wants.input {
                let mut dx = Matrix::zeros(batch, layer.n_in);
                // dX = δ·W
                matrix::gemm(
                    batch,
                    layer.n_out,
                    layer.n_in,
                    1.0,
                    (delta.data(), layer.n_out as isize, 1),
                    (&layer.w, layer.n_in as isize, 1),
                    0.0,
                    (dx.data_mut(), layer.n_in as isize, 1),
                );
                if i == 0 {
                    input_grad = dx;
                    break;
                }
                delta = dx;
            }
        }
        grads.reverse();
        Ok(GradientBundle {
            layers: grads,
            input: input_grad,
        })
    }

    /// `θ′ ← τ·θ + (1 − τ)·θ′` towards `main`.
    pub fn soft_update_from(&mut self, main: &Mlp, tau: f64) -> Result<()> {
        if !self.same_shape(main) {
            return Err(Error::domain("soft update between networks of different shapes"));
        }
        for (t, m) in self.params_mut().zip(main.params()) {
            *t = tau * m + (1.0 - tau) * *t;
        }
        Ok(())
    }
}

/// Fan-in scaled uniform initialization: hidden layers draw weights and
/// biases from `U(-1/√n_in, 1/√n_in)`, the output layer from
/// `U(-3e-3, 3e-3)`. `widths` lists input through output widths.
pub fn init_mlp(widths: &[usize], activations: &[Activation], seed: RngSeed) -> Result<Mlp> {
    init_mlp_with(widths, activations, seed, true)
}

/// Like [`init_mlp`]; with `small_output == false` the output layer uses
/// the fan-in bound too (for sub-networks feeding a larger graph).
pub fn init_mlp_with(widths: &[usize], activations: &[Activation], seed: RngSeed, small_output: bool) -> Result<Mlp> {
    if widths.len() < 2 || activations.len() != widths.len() - 1 {
        return Err(Error::domain(
            "init needs at least two widths and one activation per layer",
        ));
    }
    let mut rng = seed.rng();
    let n_layers = activations.len();
    let mut layers = Vec::with_capacity(n_layers);
    for (i, act) in activations.iter().enumerate() {
        let (n_in, n_out) = (widths[i], widths[i + 1]);
        if n_in == 0 || n_out == 0 {
            return Err(Error::domain("layer widths must be >= 1"));
        }
        let bound = if small_output && i + 1 == n_layers {
            FINAL_LAYER_INIT.min(fan_in_bound(n_in))
        } else {
            fan_in_bound(n_in)
        };
        let w = (0..n_in * n_out).map(|_| rng.random_range(-bound..bound)).collect();
        let b = (0..n_out).map(|_| rng.random_range(-bound..bound)).collect();
        layers.push(Dense::new(n_in, n_out, w, b, *act)?);
    }
    Mlp::new(layers)
}

pub fn fan_in_bound(n_in: usize) -> f64 {
    1.0 / (n_in as f64).sqrt()
}
