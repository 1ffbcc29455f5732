//! Characters of the binary sequence space and their expectations.
//!
//! A character is indexed by a finite coordinate set `K` and evaluates to
//! `Π_{k∈K} (-1)^{a_k}`.  Composing with an automaton iterate pulls the
//! support back through the stencil; expectations under the hierarchical
//! measure are computed exactly by the shift-averaged digit recursion, or
//! estimated by Monte Carlo from any [`WindowSampler`].

use std::collections::BTreeSet;
use std::io::{self, Write};

use rand::RngCore;
use thiserror::Error;

use crate::lca_core::{CoreError, ShiftPolynomial};
use crate::measures::{
    k_averaged_sign_expectation, k_averaged_sign_expectation_enumerated, HierarchicalMeasure,
    MeasureError, WindowSampler, ALPHA,
};

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("character support [{lo}, {hi}] not contained in window [{wlo}, {whi}]")]
    SupportOutsideWindow { lo: i64, hi: i64, wlo: i64, whi: i64 },
    #[error("sample count must be positive")]
    ZeroSamples,
    #[error("beta {0} outside (2^(1/5), 2^(1/4))")]
    InvalidBeta(f64),
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("series index {0} missing: entries must cover every n in [1..horizon]")]
    MissingIndex(u64),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// A character `χ_K(a) = Π_{k∈K} (-1)^{a_k}` with finite support `K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    support: BTreeSet<i64>,
}

impl Character {
    /// Builds a character, cancelling coordinates listed an even number of
    /// times (χ² is trivial coordinate-wise).
    pub fn new<I: IntoIterator<Item = i64>>(support: I) -> Self {
        let mut set = BTreeSet::new();
        for k in support {
            if !set.insert(k) {
                set.remove(&k);
            }
        }
        Self { support: set }
    }

    pub fn trivial() -> Self {
        Self { support: BTreeSet::new() }
    }

    pub fn is_trivial(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.support.iter().copied()
    }

    /// Number of coordinates in the support.
    pub fn rank(&self) -> usize {
        self.support.len()
    }

    /// `max(K) - min(K) + 1`; zero for the trivial character.
    pub fn diam(&self) -> i64 {
        match (self.support.iter().next(), self.support.iter().next_back()) {
            (Some(lo), Some(hi)) => hi - lo + 1,
            _ => 0,
        }
    }

    /// Evaluates the character on a window covering its support.
    pub fn eval(&self, w: &crate::lca_core::BitWindow) -> Result<i32, SpectralError> {
        let mut out = 1i32;
        for &k in &self.support {
            match w.get(k) {
                Some(bit) => {
                    if bit == 1 {
                        out = -out;
                    }
                }
                None => {
                    let lo = *self.support.iter().next().unwrap();
                    let hi = *self.support.iter().next_back().unwrap();
                    return Err(SpectralError::SupportOutsideWindow {
                        lo,
                        hi,
                        wlo: w.base(),
                        whi: w.base() + w.len() as i64 - 1,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Support of `χ ∘ Φ^n`: the GF(2) reduction of `{k + ℓ}` over support
    /// coordinates `k` and stencil offsets `ℓ` of `Φ^n`.
    pub fn pullback(&self, phi: &ShiftPolynomial, n: u64) -> Result<Character, CoreError> {
        let iterate = phi.pow(n)?;
        let mut out = BTreeSet::new();
        for &k in &self.support {
            for &l in iterate.support() {
                let c = k + l;
                if !out.insert(c) {
                    out.remove(&c);
                }
            }
        }
        Ok(Character { support: out })
    }
}

/// Exact expectation with the numerical mass discarded by pruning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCharValue {
    pub value: f64,
    pub numeric_error: f64,
}

/// `⟨μ, χ⟩` computed exactly over the depth truncation of `mu`; pruning is
/// budgeted three orders of magnitude below the measure tolerance.
pub fn exact_mu_char(chi: &Character, mu: &HierarchicalMeasure) -> f64 {
    exact_mu_char_detailed(chi, mu).value
}

pub fn exact_mu_char_detailed(chi: &Character, mu: &HierarchicalMeasure) -> ExactCharValue {
    if chi.is_trivial() {
        return ExactCharValue { value: 1.0, numeric_error: 0.0 };
    }
    let support: Vec<i64> = chi.support().collect();
    let avg = k_averaged_sign_expectation(&support, mu.depth(), mu.tolerance() * 1e-3);
    ExactCharValue { value: avg.value, numeric_error: avg.error_bound }
}

/// Brute-force route for [`exact_mu_char`]; exponential in depth, test use.
pub fn exact_mu_char_enumerated(
    chi: &Character,
    mu: &HierarchicalMeasure,
) -> Result<f64, MeasureError> {
    if chi.is_trivial() {
        return Ok(1.0);
    }
    let support: Vec<i64> = chi.support().collect();
    k_averaged_sign_expectation_enumerated(&support, mu.depth())
}

/// Monte-Carlo estimate of `⟨m, χ ∘ Φ^n⟩` for the sampler's measure `m`.
///
/// Returns `(estimate, stderr)` with the ±1-bounded standard error
/// `sqrt((1 - est²)/samples)`.
pub fn mc_char(
    sampler: &dyn WindowSampler,
    chi: &Character,
    phi: &ShiftPolynomial,
    n: u64,
    samples: u64,
    rng: &mut dyn RngCore,
) -> Result<(f64, f64), SpectralError> {
    if samples == 0 {
        return Err(SpectralError::ZeroSamples);
    }
    let pulled = chi.pullback(phi, n)?;
    if pulled.is_trivial() {
        return Ok((1.0, 0.0));
    }
    let lo = pulled.support().next().unwrap();
    let len = pulled.diam() as usize;
    let mut sum = 0i64;
    for _ in 0..samples {
        let w = sampler.sample(len, rng);
        // stationary sampler: translate the support onto the window base
        let shifted = Character::new(pulled.support().map(|k| k - lo + w.base()));
        sum += shifted.eval(&w)? as i64;
    }
    let est = sum as f64 / samples as f64;
    let stderr = ((1.0 - est * est).max(0.0) / samples as f64).sqrt();
    Ok((est, stderr))
}

/// Digit-structure facts about one time `n` used by the asymptotic decay
/// lemma: `I = floor(log2 n)`, `J` the least admissible split point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenericityWitness {
    pub n: u64,
    pub i: u32,
    pub j: Option<u32>,
    /// `card{digit positions in [J..I] set in n} - 1`; zero when no J exists.
    pub m: i64,
    pub g1: bool,
    pub g2: bool,
    pub g3: bool,
}

impl GenericityWitness {
    pub fn satisfied(&self) -> bool {
        self.g1 && self.g2 && self.g3
    }
}

/// Checks the three genericity conditions for time `n` with digit cap `cap`
/// and density slack `eps`, choosing the smallest admissible `J`:
/// (G1) `cap + 2 < J < I/2`; (G2) digits `J-1` and `J-2` of `n` vanish;
/// (G3) at least `(I-J)/2 - eps` digits in `[J..I]` are set.
pub fn genericity_check(n: u64, cap: u32, eps: f64) -> Result<GenericityWitness, SpectralError> {
    if n < 2 {
        return Err(SpectralError::Range(format!("n must be >= 2, got {n}")));
    }
    let i = 63 - n.leading_zeros();
    let j = ((cap + 3)..)
        .take_while(|&j| 2 * j < i)
        .find(|&j| n >> (j - 1) & 1 == 0 && n >> (j - 2) & 1 == 0);
    match j {
        Some(j) => {
            let card = (j..=i).filter(|&d| n >> d & 1 == 1).count() as i64;
            let g3 = card as f64 >= (i - j) as f64 / 2.0 - eps;
            Ok(GenericityWitness { n, i, j: Some(j), m: card - 1, g1: true, g2: true, g3 })
        }
        None => Ok(GenericityWitness { n, i, j: None, m: 0, g1: false, g2: false, g3: false }),
    }
}

/// Asymptotic log-decay bound `-(r/2)·(αβ)^I` for a rank-`r` character at a
/// generic time with `I = floor(log2 n)`; requires `2^{1/5} < β < 2^{1/4}`.
pub fn lemma3_bound(r: u32, i: u32, beta: f64) -> Result<f64, SpectralError> {
    if r == 0 {
        return Err(SpectralError::Range("rank must be positive".into()));
    }
    let lo = 1.0 / ALPHA; // 2^{1/5}
    let hi = 0.25f64.exp2();
    if !(beta > lo && beta < hi) {
        return Err(SpectralError::InvalidBeta(beta));
    }
    Ok(-(r as f64 / 2.0) * (ALPHA * beta).powi(i as i32))
}

/// Midpoint default for the `β` tuning constant: `2^{0.225}`.
pub fn default_beta() -> f64 {
    0.225f64.exp2()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEntry {
    pub n: u64,
    pub value: f64,
    pub stderr: Option<f64>,
}

/// A time-indexed series of character expectations, strictly increasing in
/// `n`, serializable as CSV `n,value,stderr`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DecaySeries {
    entries: Vec<DecayEntry>,
}

impl DecaySeries {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, n: u64, value: f64, stderr: Option<f64>) -> Result<(), SpectralError> {
        if let Some(last) = self.entries.last() {
            if n <= last.n {
                return Err(SpectralError::Range(format!(
                    "series indices must be strictly increasing: {n} after {}",
                    last.n
                )));
            }
        }
        self.entries.push(DecayEntry { n, value, stderr });
        Ok(())
    }

    pub fn entries(&self) -> &[DecayEntry] {
        &self.entries
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "n,value,stderr")?;
        for e in &self.entries {
            match e.stderr {
                Some(s) => writeln!(out, "{},{:.16e},{:.16e}", e.n, e.value, s)?,
                None => writeln!(out, "{},{:.16e},", e.n, e.value)?,
            }
        }
        Ok(())
    }
}

/// Fraction of `n ∈ [1..horizon]` whose |value| exceeds `threshold`; the
/// series must cover every index in that range.
pub fn cesaro_density(
    series: &DecaySeries,
    threshold: f64,
    horizon: u64,
) -> Result<f64, SpectralError> {
    if horizon == 0 {
        return Err(SpectralError::Range("horizon must be positive".into()));
    }
    let mut want = 1u64;
    let mut hits = 0u64;
    for e in series.entries() {
        if e.n > horizon {
            break;
        }
        if e.n != want {
            return Err(SpectralError::MissingIndex(want));
        }
        if e.value.abs() > threshold {
            hits += 1;
        }
        want += 1;
    }
    if want != horizon + 1 {
        return Err(SpectralError::MissingIndex(want));
    }
    Ok(hits as f64 / horizon as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lca_core::BitWindow;
    use crate::measures::BernoulliMeasure;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn character_basics() {
        let chi = Character::new([3, 1, 3, 5]);
        assert_eq!(chi.rank(), 2);
        assert_eq!(chi.diam(), 5);
        assert_eq!(chi.support().collect::<Vec<_>>(), vec![1, 5]);
        assert_eq!(Character::trivial().diam(), 0);

        let w = BitWindow::new(1, vec![1, 0, 0, 0, 0]);
        assert_eq!(chi.eval(&w).unwrap(), -1);
        let w = BitWindow::new(1, vec![1, 0, 0, 0, 1]);
        assert_eq!(chi.eval(&w).unwrap(), 1);
        let short = BitWindow::new(1, vec![1, 0]);
        assert!(matches!(
            chi.eval(&short),
            Err(SpectralError::SupportOutsideWindow { .. })
        ));
    }

    #[test]
    fn pullback_through_ledrappier() {
        // χ_{0} ∘ (1+σ)^2 has support {0, 2}
        let chi = Character::new([0]);
        let led = ShiftPolynomial::ledrappier();
        let pulled = chi.pullback(&led, 2).unwrap();
        assert_eq!(pulled.support().collect::<Vec<_>>(), vec![0, 2]);

        // cancellation: χ_{0,1} ∘ (1+σ) has support {0, 2}
        let chi = Character::new([0, 1]);
        let pulled = chi.pullback(&led, 1).unwrap();
        assert_eq!(pulled.support().collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn pullback_composes() {
        let chi = Character::new([-2, 3, 7]);
        let led = ShiftPolynomial::ledrappier();
        let a = chi.pullback(&led, 5).unwrap().pullback(&led, 3).unwrap();
        let b = chi.pullback(&led, 8).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_matches_enumerated() {
        let mu = HierarchicalMeasure::new(8, crate::measures::tail_bound(8)).unwrap();
        for support in [vec![1i64], vec![1, 2], vec![3, 5, 9], vec![1, 4, 6, 7]] {
            let chi = Character::new(support.clone());
            let fast = exact_mu_char_detailed(&chi, &mu);
            let slow = exact_mu_char_enumerated(&chi, &mu).unwrap();
            assert!(
                (fast.value - slow).abs() <= fast.numeric_error + 1e-12,
                "{support:?}: {} vs {slow} (numeric error {})",
                fast.value,
                fast.numeric_error
            );
        }
        assert_eq!(exact_mu_char(&Character::trivial(), &mu), 1.0);
    }

    #[test]
    fn mc_char_haar_rank_one_is_unbiased() {
        let haar = BernoulliMeasure::haar();
        let chi = Character::new([0]);
        let led = ShiftPolynomial::ledrappier();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let (est, stderr) = mc_char(&haar, &chi, &led, 4, 20_000, &mut rng).unwrap();
        assert!(est.abs() < 5.0 * stderr.max(1e-3), "est {est} stderr {stderr}");
        assert!(mc_char(&haar, &chi, &led, 4, 0, &mut rng).is_err());
    }

    #[test]
    fn genericity_witness_digits() {
        // n = 2^16 + 2^10: I = 16, digits set at 10 and 16
        let w = genericity_check((1 << 16) + (1 << 10), 4, 0.05).unwrap();
        assert_eq!(w.i, 16);
        assert_eq!(w.j, Some(7));
        assert!(w.g1 && w.g2);
        assert_eq!(w.m, 1);
        assert!(!w.g3); // 2 < (16-7)/2 - 0.05

        // small n: no admissible J window
        let w = genericity_check(12, 4, 0.05).unwrap();
        assert_eq!(w.j, None);
        assert!(!w.satisfied());

        assert!(genericity_check(1, 4, 0.05).is_err());
    }

    #[test]
    fn lemma3_bound_validation() {
        let b = lemma3_bound(2, 10, default_beta()).unwrap();
        let expected = -1.0 * (ALPHA * default_beta()).powi(10);
        assert!((b - expected).abs() < 1e-15);
        assert!(lemma3_bound(1, 10, 1.0).is_err());
        assert!(lemma3_bound(1, 10, 1.2).is_err());
        assert!(lemma3_bound(0, 10, default_beta()).is_err());
    }

    #[test]
    fn decay_series_csv_and_density() {
        let mut s = DecaySeries::new();
        s.push(1, 0.5, None).unwrap();
        s.push(2, 0.01, Some(0.001)).unwrap();
        s.push(3, -0.3, None).unwrap();
        assert!(s.push(3, 0.0, None).is_err());

        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,value,stderr\n"));
        assert!(text.contains("2,1.0000000000000000e-2,1.0000000000000000e-3"));

        assert_eq!(cesaro_density(&s, 0.05, 3).unwrap(), 2.0 / 3.0);
        assert!(matches!(cesaro_density(&s, 0.05, 4), Err(SpectralError::MissingIndex(4))));
        let mut gap = DecaySeries::new();
        gap.push(2, 0.1, None).unwrap();
        assert!(matches!(cesaro_density(&gap, 0.05, 2), Err(SpectralError::MissingIndex(1))));
    }
}
