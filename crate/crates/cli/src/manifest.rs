use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

/// Record of one run, written as `manifest.json` next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// SHA-256 of the canonical config JSON.
    pub config_hash: String,
    pub version: String,
    /// RFC 3339, UTC.
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
    pub summary: String,
    pub warnings: Vec<String>,
    pub failure: Option<String>,
    /// Exit status of the run.
    pub status: u8,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(cfg.to_json().as_bytes()))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
