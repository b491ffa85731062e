//! Command-line front end: configuration files, run orchestration and the
//! files each run leaves behind.

pub mod commands;
pub mod config;
pub mod manifest;

use std::fmt;

pub use config::Config;
pub use manifest::RunManifest;

/// A failed command, reported as `error[<class>] <message>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub class: &'static str,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // One line, whatever the underlying message contains.
        let msg = self.message.replace('\n', " ");
        write!(f, "error[{}] {}", self.class, msg)
    }
}

impl std::error::Error for CliError {}

impl From<ahc_core::Error> for CliError {
    fn from(e: ahc_core::Error) -> Self {
        use ahc_core::Error::*;
        let message = match &e {
            Domain(m) | Parse(m) | PlantFault(m) | UndefinedMetric(m) => m.clone(),
            MissingCheckpoint(m) => format!("missing checkpoint: {m}"),
            other => other.to_string(),
        };
        Self {
            class: e.class(),
            message,
        }
    }
}
