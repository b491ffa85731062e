use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Observation, Transition};
use crate::nn::Matrix;

/// Fixed-capacity ring of transitions; the oldest entry is overwritten
/// once full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
}

/// Column-stacked minibatch.
#[derive(Debug, Clone)]
pub struct TransitionBatch {
    pub s: Matrix,
    pub u: Matrix,
    pub r: Vec<f64>,
    pub s_next: Matrix,
}

impl TransitionBatch {
    pub fn from_transitions(items: &[Transition]) -> Self {
        let n = items.len();
        let mut s = Vec::with_capacity(n * Observation::WIDTH);
        let mut s_next = Vec::with_capacity(n * Observation::WIDTH);
        let mut u = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        for t in items {
            s.extend(t.s.to_array());
            s_next.extend(t.s_next.to_array());
            u.push(t.u);
            r.push(t.r);
        }
        Self {
            s: Matrix::from_vec(n, Observation::WIDTH, s).expect("observation width"),
            u: Matrix::from_vec(n, 1, u).expect("scalar action"),
            r,
            s_next: Matrix::from_vec(n, Observation::WIDTH, s_next).expect("observation width"),
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be >= 1");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            next: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform sample of `n` transitions with replacement.
    pub fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> TransitionBatch {
        assert!(!self.items.is_empty(), "sampling an empty replay buffer");
        let picked: Vec<Transition> = (0..n)
            .map(|_| self.items[rng.random_range(0..self.items.len())])
            .collect();
        TransitionBatch::from_transitions(&picked)
    }
}
