//! Active heave compensation laboratory.
//!
//! The pipeline runs from an irregular sea ([`seaway`]) through vessel
//! response and crane geometry ([`vessel`]) to the net heave seen by the
//! winch, which is then compensated by a hydraulically driven winch
//! ([`plant`]) under either a filtered PD law ([`pid`]) or a DDPG agent
//! ([`ddpg`], built on the small dense network engine in [`nn`]).
//! [`evalkit`] closes the loop over whole scenarios and computes the
//! compensation, RMS, SNR and spectral metrics.

pub mod ddpg;
pub mod error;
pub mod evalkit;
pub mod nn;
pub mod pid;
pub mod plant;
pub mod rng;
pub mod seaway;
pub mod series;
pub mod vessel;

pub use error::{Error, Result};
pub use rng::RngSeed;
pub use series::TimeSeries;
