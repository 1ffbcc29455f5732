//! Entropy computations: the exact conditional entropy of the layered
//! perturbation variables, plug-in block entropy from samples, and the
//! closed-form lemma bounds that make the zero-entropy argument quantitative.

use std::io::{self, Write};

use rand::RngCore;
use thiserror::Error;

use crate::measures::{self, WindowSampler, ALPHA};

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("probability {0} outside [0,1]")]
    Domain(f64),
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error(transparent)]
    Measure(#[from] measures::MeasureError),
}

/// `H(p) = -p log2 p - (1-p) log2 (1-p)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64, EntropyError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EntropyError::Domain(p));
    }
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
    Ok(term(p) + term(1.0 - p))
}

/// Exact total entropy of the level-`n` perturbation block:
/// `Σ_{m=1}^{2^n} H(P(d_m = 1))` with the shift-averaged distribution of
/// each `d_m` computed exactly at the given depth.
///
/// `n` is capped at 26 (the sum has `2^n` terms).
pub fn exact_conditional_entropy(n: u32, depth: u32) -> Result<f64, EntropyError> {
    if n > 26 {
        return Err(EntropyError::Range(format!("n={n} exceeds exact-mode cap 26")));
    }
    let mut total = 0.0;
    for m in 1..=(1u64 << n) {
        let p = measures::delta_distribution_averaged(m, n, depth)?;
        total += binary_entropy(p)?;
    }
    Ok(total)
}

/// How an entropy figure was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyMethod {
    ExactConditional,
    PlugInEmpirical,
    Bound,
}

impl EntropyMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntropyMethod::ExactConditional => "exact-conditional",
            EntropyMethod::PlugInEmpirical => "plug-in-empirical",
            EntropyMethod::Bound => "bound",
        }
    }
}

/// One block-entropy measurement; `entropy_bits <= block_length` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub block_length: u32,
    pub entropy_bits: f64,
    pub method: EntropyMethod,
}

impl EntropyReport {
    pub fn csv_header() -> &'static str {
        "block_length,entropy_bits,method"
    }

    pub fn write_csv_row<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{},{:.16e},{}", self.block_length, self.entropy_bits, self.method.as_str())
    }
}

/// Plug-in (empirical frequency) entropy of length-`block_length` windows
/// drawn from `sampler`.  Biased low for undersampled alphabets; the caller
/// chooses `samples` accordingly.
pub fn empirical_block_entropy(
    sampler: &dyn WindowSampler,
    block_length: u32,
    samples: u64,
    rng: &mut dyn RngCore,
) -> Result<EntropyReport, EntropyError> {
    if block_length == 0 || block_length > 24 {
        return Err(EntropyError::Range(format!(
            "block_length must be in [1..24], got {block_length}"
        )));
    }
    if samples == 0 {
        return Err(EntropyError::Range("samples must be positive".into()));
    }
    let mut counts = vec![0u64; 1usize << block_length];
    for _ in 0..samples {
        let w = sampler.sample(block_length as usize, rng);
        let key = w
            .cells()
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | b as usize);
        counts[key] += 1;
    }
    let n = samples as f64;
    let mut h = 0.0;
    for &c in &counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.log2();
        }
    }
    debug_assert!(h <= block_length as f64 + 1e-9);
    Ok(EntropyReport {
        block_length,
        entropy_bits: h,
        method: EntropyMethod::PlugInEmpirical,
    })
}

/// Closed-form per-level bounds: `P(d_m = 1) <= 8 α^n` for every `m`, hence
/// block entropy at level `n` is at most `2 n α^n` bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaBounds {
    pub delta_upper: f64,
    pub entropy_upper: f64,
}

pub fn lemma_bounds(n: u32) -> Result<LemmaBounds, EntropyError> {
    if n == 0 {
        return Err(EntropyError::Range("n must be positive".into()));
    }
    let a = ALPHA.powi(n as i32);
    Ok(LemmaBounds { delta_upper: 8.0 * a, entropy_upper: 2.0 * (n as f64) * a })
}

/// Cumulative bound `c · n · (2α)^n` on the total entropy of the first `n`
/// levels; dividing by the block length `2^n` leaves `c · n · α^n → 0`,
/// which is the zero-entropy statement.
pub fn cumulative_bound(c: f64, n: u32) -> Result<f64, EntropyError> {
    if !(c > 0.0) || n == 0 {
        return Err(EntropyError::Range(format!("need c > 0 and n >= 1, got c={c}, n={n}")));
    }
    Ok(c * n as f64 * (2.0 * ALPHA).powi(n as i32))
}
