//! Fixtures shared by the benchmarks.

use ahc_core::ddpg::{Observation, Transition, TransitionBatch};
use ahc_core::RngSeed;
use rand::Rng;

fn observation<R: Rng>(rng: &mut R) -> Observation {
    Observation {
        z_w: rng.random_range(-1.0..1.0),
        zdot_w: rng.random_range(-1.0..1.0),
        z_winch: rng.random_range(-1.0..1.0),
        zdot_winch: rng.random_range(-1.0..1.0),
    }
}

/// `n` transitions with every component drawn uniformly from a unit-scale
/// range.
pub fn random_batch(n: usize, seed: u64) -> TransitionBatch {
    let mut rng = RngSeed(seed).rng();
    let items: Vec<Transition> = (0..n)
        .map(|_| Transition {
            s: observation(&mut rng),
            u: rng.random_range(-1.0..1.0),
            r: rng.random_range(-10.0..10.0),
            s_next: observation(&mut rng),
        })
        .collect();
    TransitionBatch::from_transitions(&items)
}
