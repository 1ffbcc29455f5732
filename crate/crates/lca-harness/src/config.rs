//! Experiment configuration: a TOML schema (version 1) validated into
//! concrete library objects before any work starts.  Validation failures
//! name the violated invariant; a master seed is mandatory so no run ever
//! draws ambient entropy.

use lca_lab::lca_core::ShiftPolynomial;
use lca_lab::measures::{
    BernoulliMeasure, BlockCode, BlockCodeMeasure, HierarchicalMeasure, MeasureError,
};
use lca_lab::spectral::Character;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid measure: {0}")]
    Measure(#[from] MeasureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    EntropyScan,
    SupportCheck,
    GenericityScan,
    VerifyCore,
    SpaceTime,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeasureSpec {
    Hierarchical {
        depth: Option<u32>,
        tolerance: Option<f64>,
    },
    BlockCode {
        q: u32,
        r: u32,
        generator: Vec<String>,
        #[serde(default)]
        phase_averaged: bool,
    },
    Bernoulli {
        p: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateRange {
    pub start: u64,
    pub end: u64,
    #[serde(default = "one")]
    pub stride: u64,
}

fn one() -> u64 {
    1
}

impl IterateRange {
    pub fn values(&self) -> impl Iterator<Item = u64> + '_ {
        (self.start..=self.end).step_by(self.stride as usize)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTimeSpec {
    pub width: usize,
    pub steps: usize,
    /// Cell indices set in row 0; empty for an all-zero start.
    #[serde(default)]
    pub impulses: Vec<usize>,
}

/// Top-level schema.  `kind` selects the experiment; unrelated sections are
/// ignored by the runner but still validated if present.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Master seed; every task stream is derived from it deterministically.
    pub seed: u64,
    pub measure: Option<MeasureSpec>,
    /// Automaton stencil offsets; defaults to the Ledrappier automaton.
    #[serde(default = "default_automaton")]
    pub automaton: Vec<i64>,
    /// Character support coordinates.
    pub character: Option<Vec<i64>>,
    pub iterates: Option<IterateRange>,
    #[serde(default = "default_samples")]
    pub samples: u64,
    /// Cesàro thresholds for spectrum summaries.
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    /// Extra exponent added to n·Q in support checks (off-lattice control).
    #[serde(default)]
    pub power_offset: u64,
    /// Genericity parameters.
    #[serde(default = "default_digit_cap")]
    pub digit_cap: u32,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub space_time: Option<SpaceTimeSpec>,
    /// verify-core self-test: deliberately corrupt one computed power and
    /// require the battery to catch it.
    #[serde(default)]
    pub mutate: bool,
}

fn default_automaton() -> Vec<i64> {
    vec![0, 1]
}

fn default_samples() -> u64 {
    10_000
}

fn default_thresholds() -> Vec<f64> {
    vec![0.05]
}

fn default_digit_cap() -> u32 {
    4
}

fn default_eps() -> f64 {
    0.05
}

/// Default truncation tolerance when a hierarchical measure gives neither
/// depth nor tolerance.  (The geometric tail needs depth 120 for 1e-6;
/// depths beyond 126 would overflow the 128-bit shift arithmetic, which
/// rules out tolerances much below 1e-7.)
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

/// A config with every field resolved into library objects.
#[derive(Debug)]
pub struct ValidatedConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub measure: Option<ConcreteMeasure>,
    pub automaton: ShiftPolynomial,
    pub character: Option<Character>,
    pub iterates: Option<IterateRange>,
    pub samples: u64,
    pub thresholds: Vec<f64>,
    pub power_offset: u64,
    pub digit_cap: u32,
    pub eps: f64,
    pub space_time: Option<SpaceTimeSpec>,
    pub mutate: bool,
}

#[derive(Debug)]
pub enum ConcreteMeasure {
    Hierarchical(HierarchicalMeasure),
    BlockCode(BlockCodeMeasure),
    Bernoulli(BernoulliMeasure),
}

impl MeasureSpec {
    pub fn build(&self) -> Result<ConcreteMeasure, ConfigError> {
        match self {
            MeasureSpec::Hierarchical { depth, tolerance } => {
                let mu = match (depth, tolerance) {
                    (Some(d), Some(t)) => HierarchicalMeasure::new(*d, *t)?,
                    (Some(d), None) => {
                        HierarchicalMeasure::new(*d, lca_lab::measures::tail_bound(*d))?
                    }
                    (None, Some(t)) => HierarchicalMeasure::from_tolerance(*t)?,
                    (None, None) => HierarchicalMeasure::from_tolerance(DEFAULT_TOLERANCE)?,
                };
                Ok(ConcreteMeasure::Hierarchical(mu))
            }
            MeasureSpec::BlockCode { q, r, generator, phase_averaged } => {
                let code = BlockCode::from_bit_strings(*q, *r, generator)?;
                Ok(ConcreteMeasure::BlockCode(BlockCodeMeasure::new(code, *phase_averaged)))
            }
            MeasureSpec::Bernoulli { p } => Ok(ConcreteMeasure::Bernoulli(BernoulliMeasure::new(*p)?)),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn validate(&self) -> Result<ValidatedConfig, ConfigError> {
        if self.automaton.is_empty() {
            return Err(ConfigError::Invalid("automaton support must be non-empty".into()));
        }
        let automaton = ShiftPolynomial::new(self.automaton.iter().copied());
        if automaton.is_zero() {
            return Err(ConfigError::Invalid(
                "automaton support reduces to the zero polynomial over GF(2)".into(),
            ));
        }
        let measure = self.measure.as_ref().map(|m| m.build()).transpose()?;
        if let Some(r) = &self.iterates {
            if r.stride == 0 {
                return Err(ConfigError::Invalid("iterate stride must be positive".into()));
            }
            if r.end < r.start {
                return Err(ConfigError::Invalid("iterate range end precedes start".into()));
            }
        }
        for &t in &self.thresholds {
            if !(t > 0.0) {
                return Err(ConfigError::Invalid(format!("threshold {t} must be positive")));
            }
        }
        let needs = |field: &str, ok: bool| -> Result<(), ConfigError> {
            if ok {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{:?} requires {field}", self.kind)))
            }
        };
        match self.kind {
            ExperimentKind::Spectrum => {
                needs("a measure", measure.is_some())?;
                needs("a character", self.character.is_some())?;
                needs("an iterate range", self.iterates.is_some())?;
            }
            ExperimentKind::EntropyScan => {
                needs("a measure", measure.is_some())?;
                needs("an iterate range", self.iterates.is_some())?;
            }
            ExperimentKind::SupportCheck => {
                needs(
                    "a block-code measure",
                    matches!(measure, Some(ConcreteMeasure::BlockCode(_))),
                )?;
                needs("an iterate range", self.iterates.is_some())?;
            }
            ExperimentKind::GenericityScan => {
                needs("an iterate range", self.iterates.is_some())?;
            }
            ExperimentKind::SpaceTime => {
                let st = self.space_time.as_ref();
                needs("a space_time section", st.is_some())?;
                let st = st.unwrap();
                if st.width == 0 {
                    return Err(ConfigError::Invalid("space_time width must be positive".into()));
                }
                if st.impulses.iter().any(|&i| i >= st.width) {
                    return Err(ConfigError::Invalid("space_time impulse outside width".into()));
                }
            }
            ExperimentKind::VerifyCore => {}
        }
        Ok(ValidatedConfig {
            kind: self.kind,
            seed: self.seed,
            measure,
            automaton,
            character: self.character.as_ref().map(|s| Character::new(s.iter().copied())),
            iterates: self.iterates.clone(),
            samples: self.samples,
            thresholds: self.thresholds.clone(),
            power_offset: self.power_offset,
            digit_cap: self.digit_cap,
            eps: self.eps,
            space_time: self.space_time.clone(),
            mutate: self.mutate,
        })
    }
}
