use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// The plant integrator produced or received a non-finite value.
    #[error("plant fault: {0}")]
    PlantFault(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("training diverged at episode {episode}, step {step}: {reason}")]
    Diverged {
        episode: usize,
        step: usize,
        reason: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("missing checkpoint: {0}")]
    MissingCheckpoint(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// Short machine-readable class name, stable across releases.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Dimension { .. } => "dimension",
            Error::PlantFault(_) => "plant_fault",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::Diverged { .. } => "diverged",
            Error::Parse(_) => "parse",
            Error::MissingCheckpoint(_) => "missing_checkpoint",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }
}
