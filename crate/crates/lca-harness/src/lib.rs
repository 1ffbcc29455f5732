//! Experiment harness for the GF(2) automaton laboratory: TOML-configured
//! runs, deterministic seed derivation, index-ordered parallel sweeps, and
//! CSV/P1 emission.  Rerunning any experiment with the same config and
//! seed produces byte-identical data files at every worker count.

pub mod config;
pub mod manifest;
pub mod runs;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, ValidatedConfig};
pub use manifest::{task_seed, RunManifest};
pub use runs::{execute, RunError, RunOutput};
