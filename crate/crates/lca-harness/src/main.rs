use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use lca_harness::config::{ExperimentConfig, ExperimentKind};
use lca_harness::manifest::RunManifest;
use lca_harness::runs;

#[derive(Parser)]
#[command(name = "lca-harness", version, about = "Deterministic experiments on GF(2) cellular automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (output bytes are identical at any count).
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output data file; a `<out>.manifest.toml` is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Character-expectation decay series.
    Spectrum(Common),
    /// Block entropies and conditional-entropy rates.
    EntropyScan(Common),
    /// Code-orbit closure under automaton powers.
    SupportCheck(Common),
    /// Digit-genericity of iterate indices.
    GenericityScan(Common),
    /// Self-contained invariant battery.
    VerifyCore(Common),
    /// Space-time diagram as a P1 bitmap.
    SpaceTime(Common),
}

impl Command {
    fn parts(&self) -> (ExperimentKind, &Common) {
        match self {
            Command::Spectrum(c) => (ExperimentKind::Spectrum, c),
            Command::EntropyScan(c) => (ExperimentKind::EntropyScan, c),
            Command::SupportCheck(c) => (ExperimentKind::SupportCheck, c),
            Command::GenericityScan(c) => (ExperimentKind::GenericityScan, c),
            Command::VerifyCore(c) => (ExperimentKind::VerifyCore, c),
            Command::SpaceTime(c) => (ExperimentKind::SpaceTime, c),
        }
    }
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_BATTERY: u8 = 2;
const EXIT_IO: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = cli.command.parts();

    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", common.config.display());
            return ExitCode::from(EXIT_IO);
        }
    };
    let mut config = match ExperimentConfig::from_toml(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if config.kind != kind {
        eprintln!(
            "error: config kind {:?} does not match the `{:?}` subcommand",
            config.kind, kind
        );
        return ExitCode::from(EXIT_VALIDATION);
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let validated = match config.validate() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };

    // canonical serialization (not the input file) feeds the digest so
    // formatting differences don't break reproducibility comparisons
    let canonical = toml::to_string(&config).expect("config reserializes");
    let mut manifest = RunManifest::new(&canonical, config.seed);
    let started = Instant::now();

    let output = match runs::execute(&validated, common.workers) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    manifest.notes = output.notes;

    if let Err(e) = std::fs::write(&common.out, &output.data) {
        eprintln!("error: cannot write {}: {e}", common.out.display());
        return ExitCode::from(EXIT_IO);
    }
    let manifest_path = common.out.with_extension(format!(
        "{}manifest.toml",
        common
            .out
            .extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    if let Err(e) = std::fs::write(&manifest_path, manifest.to_toml()) {
        eprintln!("error: cannot write {}: {e}", manifest_path.display());
        return ExitCode::from(EXIT_IO);
    }

    if output.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("property battery reported failures; see {}", common.out.display());
        ExitCode::from(EXIT_BATTERY)
    }
}
