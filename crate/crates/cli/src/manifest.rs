use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::Config;
use ahc_core::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    /// Master seed and the per-consumer seeds split from it.
    pub seeds: BTreeMap<String, u64>,
    /// Every effective configuration value, after defaults and overrides.
    pub config: BTreeMap<String, String>,
    /// Output files by role, relative to the manifest's directory.
    pub artifacts: BTreeMap<String, PathBuf>,
    /// Command-specific scalars, such as the final greedy return.
    pub summary: BTreeMap<String, f64>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

impl RunManifest {
    pub fn start(command: &str, cfg: &Config) -> Self {
        Self {
            tool: "ahc".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            started_unix: unix_now(),
            finished_unix: 0,
            seeds: BTreeMap::from([("master".to_string(), cfg.seed)]),
            config: cfg.entries().into_iter().collect(),
            artifacts: BTreeMap::new(),
            summary: BTreeMap::new(),
        }
    }

    pub fn artifact(&mut self, role: impl Into<String>, file: impl Into<PathBuf>) {
        self.artifacts.insert(role.into(), file.into());
    }

    /// Stamps the finish time, checks that every artifact exists under
    /// `dir` and writes `manifest.json` there.
    pub fn finish(&mut self, dir: &Path) -> Result<PathBuf> {
        for (role, file) in &self.artifacts {
            if !dir.join(file).is_file() {
                return Err(Error::Domain(format!("artifact `{role}` missing at {}", file.display())));
            }
        }
        self.finished_unix = unix_now();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(&path, text + "\n")?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}
