//! Run manifests: provenance written beside each data file.  The manifest
//! carries the volatile facts (timestamp, wall-clock) so that the data
//! files themselves stay byte-identical across reruns of the same config.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the canonical TOML serialization of the config.
    pub config_digest: String,
    pub artifact_version: String,
    /// Seconds since the Unix epoch at run start.
    pub timestamp: u64,
    /// Master seed and the derivation rule for per-task streams.
    pub master_seed: u64,
    pub seed_rule: String,
    pub wall_clock_seconds: f64,
    /// Free-form scan results recorded for reproducibility (e.g. the
    /// brute-forced witness character).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

pub fn config_digest(canonical_toml: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_toml.as_bytes());
    format!("{:x}", hasher.finalize())
}

impl RunManifest {
    pub fn new(canonical_toml: &str, master_seed: u64) -> Self {
        Self {
            config_digest: config_digest(canonical_toml),
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            master_seed,
            seed_rule: "task_seed = splitmix64(master_seed XOR task_index * 0x9E3779B97F4A7C15)"
                .to_string(),
            wall_clock_seconds: 0.0,
            notes: Vec::new(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Derives an independent, stable stream seed for task `index` from the
/// master seed (splitmix64 finalizer over a golden-ratio stride).
pub fn task_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
