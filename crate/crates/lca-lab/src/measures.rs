//! Samplers and exact algebra for the measures under study.
//!
//! The hierarchical measure is built from layers of independent generator
//! variables: level `n` contributes `2^n` variables `p^n_1..p^n_{2^n}`,
//! each Bernoulli(α^n) with α = 2^{-1/5}, laid out `2^{n+1}`-periodically
//! so that level `n` occupies positions `≡ [2^n+1 .. 2^{n+1}]` within each
//! period.  Every coordinate of the limit sequence is the GF(2) sum of the
//! variables stacked above it, and the measure itself is the stationary
//! average over a uniform shift.  All infinite constructions are realized
//! through a depth-`D` truncation with a geometric tail bound.
//!
//! The block-code measure concatenates independent uniform draws from an
//! `R`-dimensional subspace `B ⊂ GF(2)^Q`, optionally phase-averaged over
//! the `Q` shifts of the block grid.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use rand::RngCore;
use thiserror::Error;

use crate::lca_core::BitWindow;

/// α = 2^{-1/5}: level `n` variables are Bernoulli(α^n).
pub const ALPHA: f64 = 0.8705505632961241; // 2^(-0.2)

/// Largest supported truncation depth; shift arithmetic uses 128-bit
/// integers, so the uniform shift must fit in `[0, 2^126)`.
pub const MAX_DEPTH: u32 = 126;

/// Bernoulli parameter of a level-`n` generator variable, `α^n`.
pub fn level_p_one(level: u32) -> f64 {
    (-(level as f64) / 5.0).exp2()
}

#[derive(Debug, Error, PartialEq)]
pub enum MeasureError {
    #[error("depth {depth} / tolerance {tolerance} mismatch: tail bound {tail} exceeds tolerance")]
    TailBound { depth: u32, tolerance: f64, tail: f64 },
    #[error("depth must be in [1..={MAX_DEPTH}], got {0}")]
    InvalidDepth(u32),
    #[error("no depth ≤ {MAX_DEPTH} reaches tolerance {0}")]
    ToleranceUnreachable(f64),
    #[error("index out of range: {0}")]
    Range(String),
    #[error("invalid block code: {0}")]
    InvalidCode(String),
    #[error("window of length {len} too short: need at least {need}")]
    WindowTooShort { len: usize, need: usize },
    #[error("probability {0} outside [0,1]")]
    InvalidProbability(f64),
}

/// A single level's cell distribution: `P(1) = α^level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelDistribution {
    pub level: u32,
    pub p_one: f64,
}

impl LevelDistribution {
    pub fn new(level: u32) -> Self {
        Self { level, p_one: level_p_one(level) }
    }
}

/// Identifier of one generator variable `p^level_index`, `index ∈ [1..2^level]`.
///
/// The layout is `2^{level+1}`-periodic, so the same variable reappears in
/// every period block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VariableId {
    pub level: u32,
    pub index: u128,
}

/// A GF(2) linear form over generator variables: inserting a member twice
/// removes it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VariableSet {
    members: BTreeSet<VariableId>,
}

impl VariableSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn toggle(&mut self, id: VariableId) {
        if !self.members.insert(id) {
            self.members.remove(&id);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &VariableId> {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// XOR of two linear forms.
    pub fn symmetric_difference(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for &id in other.iter() {
            out.toggle(id);
        }
        out
    }
}

/// The exact linear-form expansion of one coordinate: its generator
/// variables plus a deterministic parity bit from level 0 (whose variables
/// are Bernoulli(α⁰) = constant 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateExpansion {
    pub variables: VariableSet,
    pub constant_parity: bool,
}

/// Expands coordinate `j` (1-based) over levels `1..depth`.
///
/// Level `n` contributes at `j` iff `((j-1) mod 2^{n+1}) >= 2^n`, with index
/// `((j-1) mod 2^n) + 1`.  Level 0 sits at even positions and is tracked as
/// the constant parity.
pub fn expand_coordinate(j: i128, depth: u32) -> CoordinateExpansion {
    assert!(depth >= 1 && depth <= MAX_DEPTH, "depth out of range");
    let mut variables = VariableSet::new();
    for n in 1..depth {
        let period = 1i128 << (n + 1);
        let r = (j - 1).rem_euclid(period);
        if r >= (1i128 << n) {
            let index = (r & ((1i128 << n) - 1)) as u128 + 1;
            variables.toggle(VariableId { level: n, index });
        }
    }
    let constant_parity = (j - 1).rem_euclid(2) == 1;
    CoordinateExpansion { variables, constant_parity }
}

/// Depth-truncated realization of the hierarchical measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchicalMeasure {
    depth: u32,
    tolerance: f64,
}

/// Geometric tail of levels `>= depth`: `2 α^depth / (1-α)`.
pub fn tail_bound(depth: u32) -> f64 {
    2.0 * level_p_one(depth) / (1.0 - ALPHA)
}

impl HierarchicalMeasure {
    pub fn new(depth: u32, tolerance: f64) -> Result<Self, MeasureError> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(MeasureError::InvalidDepth(depth));
        }
        let tail = tail_bound(depth);
        if !(tail <= tolerance) {
            return Err(MeasureError::TailBound { depth, tolerance, tail });
        }
        Ok(Self { depth, tolerance })
    }

    /// Smallest depth whose tail bound meets `tolerance`.
    pub fn from_tolerance(tolerance: f64) -> Result<Self, MeasureError> {
        for depth in 1..=MAX_DEPTH {
            if tail_bound(depth) <= tolerance {
                return Ok(Self { depth, tolerance });
            }
        }
        Err(MeasureError::ToleranceUnreachable(tolerance))
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Draws a window `[a_{k+1} .. a_{k+L}]` of the shifted layered
    /// construction, with `k` uniform in `[0, 2^depth)` and generator
    /// variables sampled lazily per `(level, index)`.
    pub fn sample_window(&self, len: usize, rng: &mut dyn RngCore) -> BitWindow {
        assert!(len >= 1);
        let k = random_shift(self.depth, rng);
        let mut cache: HashMap<VariableId, u8> = HashMap::new();
        let cells = (1..=len as i128)
            .map(|i| {
                let exp = expand_coordinate(k + i, self.depth);
                let mut bit = exp.constant_parity as u8;
                for &id in exp.variables.iter() {
                    let v = *cache.entry(id).or_insert_with(|| {
                        rng.gen_bool(level_p_one(id.level)) as u8
                    });
                    bit ^= v;
                }
                bit
            })
            .collect();
        BitWindow::new(1, cells)
    }
}

fn random_shift(depth: u32, rng: &mut dyn RngCore) -> i128 {
    let mut buf = [0u8; 16];
    rng.fill_bytes(&mut buf);
    let raw = u128::from_le_bytes(buf);
    (raw >> (128 - depth)) as i128
}

/// The "duplication with error" construction: starting from `[0]`, each
/// round appends a copy of the current word with independent
/// Bernoulli(α^n) copying errors.  Agrees in distribution with the
/// unshifted layered construction on `[1..2^n_max]`.
pub fn sample_by_duplication(n_max: u32, rng: &mut dyn RngCore) -> BitWindow {
    assert!((1..=30).contains(&n_max), "n_max out of range");
    let mut word = vec![0u8];
    for n in 0..n_max {
        let p = level_p_one(n);
        let copy: Vec<u8> = word
            .iter()
            .map(|&w| w ^ (rng.gen_bool(p) as u8))
            .collect();
        word.extend(copy);
    }
    BitWindow::new(1, word)
}

/// `P(d_m = 1)` for the perturbation `d_m = a_{k+m+2^n} + a_{k+m}` at a
/// specific shift `k`, under the depth-truncated measure.
///
/// The surviving variables' levels enter through the closed form
/// `p = (1 - sign · Π_j (1 - 2 α^{n_j})) / 2`.
pub fn delta_distribution(m: u64, k: u128, n: u32, depth: u32) -> Result<f64, MeasureError> {
    check_delta_range(m, n, depth)?;
    let a = expand_coordinate(k as i128 + m as i128, depth);
    let b = expand_coordinate(k as i128 + m as i128 + (1i128 << n), depth);
    let diff = a.variables.symmetric_difference(&b.variables);
    let parity = a.constant_parity ^ b.constant_parity;
    let prod = signed_product(diff.iter().map(|id| 1.0 - 2.0 * level_p_one(id.level)));
    let sign = if parity { -1.0 } else { 1.0 };
    Ok((1.0 - sign * prod) / 2.0)
}

/// Exact mean of [`delta_distribution`] over all shifts `k ∈ [0, 2^depth)`.
pub fn delta_distribution_averaged(m: u64, n: u32, depth: u32) -> Result<f64, MeasureError> {
    check_delta_range(m, n, depth)?;
    let support = [m as i64, m as i64 + (1i64 << n)];
    let avg = k_averaged_sign_expectation(&support, depth, 0.0);
    Ok((1.0 - avg.value) / 2.0)
}

fn check_delta_range(m: u64, n: u32, depth: u32) -> Result<(), MeasureError> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(MeasureError::InvalidDepth(depth));
    }
    if n >= depth || n >= 62 {
        return Err(MeasureError::Range(format!("level {n} not below depth {depth}")));
    }
    if m == 0 || m > (1u64 << n) {
        return Err(MeasureError::Range(format!("index m={m} outside [1..2^{n}]")));
    }
    Ok(())
}

/// Product of signed factors in [-1, 1], switching to log-space
/// accumulation beyond 64 factors to limit rounding drift.
fn signed_product<I: Iterator<Item = f64>>(factors: I) -> f64 {
    let collected: Vec<f64> = factors.collect();
    if collected.len() <= 64 {
        collected.into_iter().product()
    } else {
        let mut log_sum = 0.0f64;
        let mut negative = false;
        for f in collected {
            if f == 0.0 {
                return 0.0;
            }
            negative ^= f < 0.0;
            log_sum += f.abs().ln();
        }
        let mag = log_sum.exp();
        if negative {
            -mag
        } else {
            mag
        }
    }
}

/// Result of an exact shift-averaged expectation, with the mass discarded
/// by state pruning (zero unless a `budget > 0` permitted early exit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactAverage {
    pub value: f64,
    pub error_bound: f64,
}

const MAX_STATES: usize = 1 << 14;

/// Exact average over `k ∈ [0, 2^depth)` of
/// `(-1)^{a_{k+j_1} + ... + a_{k+j_r}}` under the depth-truncated layered
/// construction, for the coordinate set `support = {j_1..j_r}`.
///
/// Works one binary digit of `k` at a time: a position set splits by parity
/// into two independent variable namespaces while the current level's
/// contribution reduces to a parity count per namespace.  States are merged
/// by a translation-canonical form; `budget` bounds the total weight that
/// may be discarded when the remaining mass is provably below it.
pub fn k_averaged_sign_expectation(support: &[i64], depth: u32, budget: f64) -> ExactAverage {
    assert!(depth >= 1 && depth <= MAX_DEPTH);
    // reduce mod 2 multiplicity
    let mut set = BTreeSet::new();
    for &j in support {
        if !set.insert(j) {
            set.remove(&j);
        }
    }
    if set.is_empty() {
        return ExactAverage { value: 1.0, error_bound: 0.0 };
    }
    let min = *set.iter().next().unwrap();
    let span = *set.iter().next_back().unwrap() - min;
    assert!(span < i32::MAX as i64, "support span too large");
    let initial: Vec<i32> = set.iter().map(|&j| (j - min + 1) as i32).collect();

    let mut states: HashMap<Vec<Vec<i32>>, f64> = HashMap::new();
    states.insert(vec![initial], 1.0);
    let mut done = 0.0f64;
    let mut dropped = 0.0f64;

    for s in 0..depth {
        let w = 1.0 - 2.0 * (-(s as f64) / 5.0).exp2();
        let mut next: HashMap<Vec<Vec<i32>>, f64> = HashMap::new();
        for (state, wt) in &states {
            'branch: for b in 0..=1i32 {
                let mut factor = 0.5 * wt;
                let mut children: Vec<Vec<i32>> = Vec::with_capacity(state.len() * 2);
                for color in state {
                    let mut evens = Vec::new();
                    let mut odds = Vec::new();
                    for &p in color {
                        if (p + b) % 2 == 0 {
                            evens.push((p + b) / 2);
                        } else {
                            odds.push((p + b + 1) / 2);
                        }
                    }
                    if evens.len() % 2 == 1 {
                        factor *= w;
                        if factor == 0.0 {
                            continue 'branch;
                        }
                    }
                    if !odds.is_empty() {
                        children.push(odds);
                    }
                    if !evens.is_empty() {
                        children.push(evens);
                    }
                }
                if children.is_empty() {
                    done += factor;
                } else {
                    *next.entry(canonical(children)).or_insert(0.0) += factor;
                }
            }
        }
        let mass: f64 = next.values().map(|v| v.abs()).sum();
        if mass <= budget - dropped {
            dropped += mass;
            states = HashMap::new();
            break;
        }
        if next.len() > MAX_STATES {
            let mut items: Vec<(Vec<Vec<i32>>, f64)> = next.into_iter().collect();
            items.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
            for (_, v) in items.drain(MAX_STATES..) {
                dropped += v.abs();
            }
            next = items.into_iter().collect();
        }
        states = next;
    }
    // levels >= depth are truncated away: every remaining branch contributes
    // its weight unchanged
    done += states.values().sum::<f64>();
    ExactAverage { value: done, error_bound: dropped }
}

fn canonical(mut colors: Vec<Vec<i32>>) -> Vec<Vec<i32>> {
    let min = colors.iter().flat_map(|c| c.iter()).copied().min().unwrap();
    let shift = 1 - min;
    for c in colors.iter_mut() {
        for p in c.iter_mut() {
            *p += shift;
        }
        c.sort_unstable();
    }
    colors.sort_unstable();
    colors
}

/// Brute-force route for [`k_averaged_sign_expectation`]: enumerates every
/// shift in `[0, 2^depth)` and every level's variable pattern directly.
/// Exponential in `depth`; test oracle only.
pub fn k_averaged_sign_expectation_enumerated(
    support: &[i64],
    depth: u32,
) -> Result<f64, MeasureError> {
    if depth == 0 || depth > 24 {
        return Err(MeasureError::InvalidDepth(depth));
    }
    let mut set = BTreeSet::new();
    for &j in support {
        if !set.insert(j) {
            set.remove(&j);
        }
    }
    let mut total = 0.0;
    for k in 0..(1i128 << depth) {
        let mut combined = VariableSet::new();
        let mut parity = false;
        for &j in &set {
            let exp = expand_coordinate(j as i128 + k, depth);
            combined = combined.symmetric_difference(&exp.variables);
            parity ^= exp.constant_parity;
        }
        let mut prod = if parity { -1.0 } else { 1.0 };
        for id in combined.iter() {
            prod *= 1.0 - 2.0 * level_p_one(id.level);
        }
        total += prod;
    }
    Ok(total / (1u64 << depth) as f64)
}

/// An `R`-dimensional linear block code inside `GF(2)^Q` with generator and
/// check matrices; `b ∈ B ⟺ check·b = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCode {
    q: u32,
    r: u32,
    generator: Vec<u64>, // row bitmasks, bit i = column i+1
    check: Vec<u64>,
}

impl BlockCode {
    pub fn new(q: u32, r: u32, generator_rows: &[Vec<u8>]) -> Result<Self, MeasureError> {
        if q < 2 || q > 63 || !q.is_power_of_two() {
            return Err(MeasureError::InvalidCode(format!(
                "Q must be a power of two in [2..63], got {q}"
            )));
        }
        if r == 0 || r >= q {
            return Err(MeasureError::InvalidCode(format!(
                "R must satisfy 1 <= R < Q, got R={r}, Q={q}"
            )));
        }
        if generator_rows.len() != r as usize {
            return Err(MeasureError::InvalidCode(format!(
                "expected {r} generator rows, got {}",
                generator_rows.len()
            )));
        }
        let mut generator = Vec::with_capacity(r as usize);
        for row in generator_rows {
            if row.len() != q as usize {
                return Err(MeasureError::InvalidCode(format!(
                    "generator row length {} != Q={q}",
                    row.len()
                )));
            }
            let mut mask = 0u64;
            for (i, &b) in row.iter().enumerate() {
                if b > 1 {
                    return Err(MeasureError::InvalidCode("generator entries must be bits".into()));
                }
                mask |= (b as u64) << i;
            }
            generator.push(mask);
        }
        if gf2_rank(&generator) != r as usize {
            return Err(MeasureError::InvalidCode(
                "generator rows are linearly dependent over GF(2)".into(),
            ));
        }
        let check = gf2_nullspace(&generator, q as usize);
        debug_assert_eq!(check.len(), (q - r) as usize);
        debug_assert!(generator
            .iter()
            .all(|&g| check.iter().all(|&h| (g & h).count_ones() % 2 == 0)));
        Ok(Self { q, r, generator, check })
    }

    /// Parses generator rows given as bit-strings like `"1100"`.
    pub fn from_bit_strings(q: u32, r: u32, rows: &[String]) -> Result<Self, MeasureError> {
        let parsed: Result<Vec<Vec<u8>>, MeasureError> = rows
            .iter()
            .map(|s| {
                s.chars()
                    .map(|c| match c {
                        '0' => Ok(0u8),
                        '1' => Ok(1u8),
                        other => Err(MeasureError::InvalidCode(format!(
                            "invalid bit character '{other}' in generator row"
                        ))),
                    })
                    .collect()
            })
            .collect();
        Self::new(q, r, &parsed?)
    }

    /// The default test instance: Q=4, R=2, rows 1100 and 0011.
    pub fn default_example() -> Self {
        Self::new(4, 2, &[vec![1, 1, 0, 0], vec![0, 0, 1, 1]]).unwrap()
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Membership in the dual code `B^⊥`: true iff `selection` is
    /// orthogonal to every generator row.  Characters whose per-block
    /// selections all lie in the dual have expectation 1 under the
    /// uniform codeword distribution (and 0 otherwise).
    pub fn dual_contains(&self, selection: &[u8]) -> bool {
        debug_assert_eq!(selection.len(), self.q as usize);
        let mask: u64 = selection
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (((b & 1) as u64) << i));
        self.generator.iter().all(|&g| (g & mask).count_ones() % 2 == 0)
    }

    pub fn is_codeword(&self, block: &[u8]) -> bool {
        debug_assert_eq!(block.len(), self.q as usize);
        let mask: u64 = block
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((b as u64) << i));
        self.check.iter().all(|&h| (h & mask).count_ones() % 2 == 0)
    }

    fn encode(&self, coeffs: u64) -> u64 {
        let mut out = 0u64;
        for (i, &g) in self.generator.iter().enumerate() {
            if coeffs >> i & 1 == 1 {
                out ^= g;
            }
        }
        out
    }
}

fn gf2_rank(rows: &[u64]) -> usize {
    let mut basis: Vec<u64> = Vec::new();
    for &row in rows {
        let mut v = row;
        for &b in &basis {
            let pivot = 1u64 << (63 - b.leading_zeros());
            if v & pivot != 0 {
                v ^= b;
            }
        }
        if v != 0 {
            basis.push(v);
        }
    }
    basis.len()
}

/// Basis of `{h : g·h = 0 for all generator rows g}` over GF(2).
fn gf2_nullspace(rows: &[u64], ncols: usize) -> Vec<u64> {
    // reduced row echelon form
    let mut rref: Vec<u64> = rows.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..ncols {
        if let Some(i) = (rank..rref.len()).find(|&i| rref[i] >> col & 1 == 1) {
            rref.swap(rank, i);
            for j in 0..rref.len() {
                if j != rank && rref[j] >> col & 1 == 1 {
                    rref[j] ^= rref[rank];
                }
            }
            pivots.push(col);
            rank += 1;
        }
    }
    let mut basis = Vec::new();
    for col in 0..ncols {
        if pivots.contains(&col) {
            continue;
        }
        let mut v = 1u64 << col;
        for (row, &p) in pivots.iter().enumerate() {
            if rref[row] >> col & 1 == 1 {
                v |= 1u64 << p;
            }
        }
        basis.push(v);
    }
    basis
}

/// The positive-entropy contrast measure: concatenated uniform codewords,
/// optionally averaged over the block-grid phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCodeMeasure {
    pub code: BlockCode,
    pub phase_averaged: bool,
}

impl BlockCodeMeasure {
    pub fn new(code: BlockCode, phase_averaged: bool) -> Self {
        Self { code, phase_averaged }
    }

    /// Draws `num_blocks` independent uniform codewords and concatenates
    /// them at base 1.  When phase-averaged, the stream is shifted by a
    /// uniform `q ∈ [1..Q]` and truncated to `(num_blocks-1)·Q` cells.
    pub fn code_sample(&self, num_blocks: usize, rng: &mut dyn RngCore) -> BitWindow {
        assert!(num_blocks >= 1);
        let q = self.code.q as usize;
        let mut cells = Vec::with_capacity(num_blocks * q);
        for _ in 0..num_blocks {
            let coeffs = rng.gen::<u64>() & ((1u64 << self.code.r) - 1);
            let block = self.code.encode(coeffs);
            for i in 0..q {
                cells.push((block >> i & 1) as u8);
            }
        }
        if self.phase_averaged {
            let shift = rng.gen_range(1..=q);
            let keep = (num_blocks - 1) * q;
            cells.drain(..shift);
            cells.truncate(keep);
        }
        BitWindow::new(1, cells)
    }
}

/// Least phase `p ∈ [0..Q)` such that every complete `Q`-block of `w`
/// starting at a coordinate `≡ 1+p (mod Q)` passes the check matrix, or
/// `None` when no phase works.
pub fn code_membership(w: &BitWindow, code: &BlockCode) -> Result<Option<u32>, MeasureError> {
    let q = code.q as i64;
    if (w.len() as i64) < 2 * q {
        return Err(MeasureError::WindowTooShort { len: w.len(), need: 2 * code.q as usize });
    }
    'phase: for p in 0..code.q {
        let mut start = w.base() + (1 + p as i64 - w.base()).rem_euclid(q);
        debug_assert!(start >= w.base());
        while start + q <= w.base() + w.len() as i64 {
            let lo = (start - w.base()) as usize;
            if !code.is_codeword(&w.cells()[lo..lo + q as usize]) {
                continue 'phase;
            }
            start += q;
        }
        return Ok(Some(p));
    }
    Ok(None)
}

/// A stationary source of finite windows; every sampler consumes an
/// explicit random stream so identical seeds reproduce identical windows.
pub trait WindowSampler {
    fn sample(&self, len: usize, rng: &mut dyn RngCore) -> BitWindow;
}

impl WindowSampler for HierarchicalMeasure {
    fn sample(&self, len: usize, rng: &mut dyn RngCore) -> BitWindow {
        self.sample_window(len, rng)
    }
}

impl WindowSampler for BlockCodeMeasure {
    fn sample(&self, len: usize, rng: &mut dyn RngCore) -> BitWindow {
        let q = self.code.q as usize;
        let num_blocks = len / q + 2;
        let mut cells = self.code_sample(num_blocks, rng).into_cells();
        cells.truncate(len);
        BitWindow::new(1, cells)
    }
}

/// I.i.d. Bernoulli(p) cells; p = 1/2 is the Haar measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliMeasure {
    pub p: f64,
}

impl BernoulliMeasure {
    pub fn new(p: f64) -> Result<Self, MeasureError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(MeasureError::InvalidProbability(p));
        }
        Ok(Self { p })
    }

    pub fn haar() -> Self {
        Self { p: 0.5 }
    }
}

impl WindowSampler for BernoulliMeasure {
    fn sample(&self, len: usize, rng: &mut dyn RngCore) -> BitWindow {
        let cells = (0..len).map(|_| rng.gen_bool(self.p) as u8).collect();
        BitWindow::new(1, cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn expand_matches_layer_layout() {
        // column 11 carries p^1_1 and p^3_3
        let e = expand_coordinate(11, 5);
        let vars: Vec<(u32, u128)> = e.variables.iter().map(|v| (v.level, v.index)).collect();
        assert_eq!(vars, vec![(1, 1), (3, 3)]);
        assert!(!e.constant_parity);

        // column 1 is blank
        let e1 = expand_coordinate(1, 8);
        assert!(e1.variables.is_empty());
        assert!(!e1.constant_parity);

        // column 2 is level-0 only
        let e2 = expand_coordinate(2, 2);
        assert!(e2.variables.is_empty());
        assert!(e2.constant_parity);

        // column 7 carries p^1_1 and p^2_3
        let e7 = expand_coordinate(7, 5);
        let vars: Vec<(u32, u128)> = e7.variables.iter().map(|v| (v.level, v.index)).collect();
        assert_eq!(vars, vec![(1, 1), (2, 3)]);
    }

    #[test]
    fn measure_construction_validates_tail() {
        assert!(HierarchicalMeasure::new(6, 1e-3).is_err());
        let mu = HierarchicalMeasure::new(70, 1e-3).unwrap();
        assert_eq!(mu.depth(), 70);
        let mu = HierarchicalMeasure::from_tolerance(1e-6).unwrap();
        assert!(tail_bound(mu.depth()) <= 1e-6);
        assert!(tail_bound(mu.depth() - 1) > 1e-6);
        assert!(HierarchicalMeasure::from_tolerance(1e-12).is_err());
    }

    #[test]
    fn delta_of_coordinate_pair_reduces_to_two_variables() {
        // n=2, k=6, m=1: d_1 = p^3_3 + p^2_3
        let a = expand_coordinate(7, 6);
        let b = expand_coordinate(11, 6);
        let diff = a.variables.symmetric_difference(&b.variables);
        let levels: Vec<(u32, u128)> = diff.iter().map(|v| (v.level, v.index)).collect();
        assert_eq!(levels, vec![(2, 3), (3, 3)]);

        let p = delta_distribution(1, 6, 2, 6).unwrap();
        let a2 = level_p_one(2);
        let a3 = level_p_one(3);
        let expected = (1.0 - (1.0 - 2.0 * a2) * (1.0 - 2.0 * a3)) / 2.0;
        assert!((p - expected).abs() < 1e-15);
    }

    #[test]
    fn delta_degenerate_depth_gives_level_n_only() {
        // depth = n+1 leaves only the level-n variable: p_odd = alpha^n
        for n in 1..6 {
            for m in [1u64, 1 << (n - 1), 1 << n] {
                let p = delta_distribution_averaged(m, n, n + 1).unwrap();
                assert!((p - level_p_one(n)).abs() < 1e-14, "n={n} m={m} p={p}");
            }
        }
    }

    #[test]
    fn delta_range_errors() {
        assert!(delta_distribution_averaged(0, 3, 6).is_err());
        assert!(delta_distribution_averaged(9, 3, 6).is_err());
        assert!(delta_distribution_averaged(1, 6, 6).is_err());
    }

    #[test]
    fn dp_average_matches_enumeration() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n = rng.gen_range(1..=4);
            let mut support = Vec::new();
            while support.len() < n {
                let c = rng.gen_range(-6i64..20);
                if !support.contains(&c) {
                    support.push(c);
                }
            }
            let depth = rng.gen_range(1..=9);
            let fast = k_averaged_sign_expectation(&support, depth, 0.0);
            let slow = k_averaged_sign_expectation_enumerated(&support, depth).unwrap();
            assert!(
                (fast.value - slow).abs() < 1e-12,
                "support {support:?} depth {depth}: {} vs {slow}",
                fast.value
            );
            assert_eq!(fast.error_bound, 0.0);
        }
    }

    #[test]
    fn averaged_delta_matches_per_shift_mean() {
        for (m, n, depth) in [(1u64, 2u32, 6u32), (3, 2, 7), (2, 3, 8)] {
            let direct: f64 = (0..(1u128 << depth))
                .map(|k| delta_distribution(m, k, n, depth).unwrap())
                .sum::<f64>()
                / (1u64 << depth) as f64;
            let fast = delta_distribution_averaged(m, n, depth).unwrap();
            assert!((direct - fast).abs() < 1e-12, "m={m} n={n}: {direct} vs {fast}");
        }
    }

    #[test]
    fn duplication_first_round_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let w = sample_by_duplication(1, &mut rng);
        assert_eq!(w.cells(), &[0, 1]);
        assert_eq!(w.base(), 1);
    }

    #[test]
    fn samplers_are_deterministic() {
        let mu = HierarchicalMeasure::new(40, 1e-1).unwrap();
        let a = mu.sample_window(16, &mut ChaCha12Rng::seed_from_u64(42));
        let b = mu.sample_window(16, &mut ChaCha12Rng::seed_from_u64(42));
        assert_eq!(a, b);

        let meas = BlockCodeMeasure::new(BlockCode::default_example(), true);
        let a = meas.code_sample(5, &mut ChaCha12Rng::seed_from_u64(3));
        let b = meas.code_sample(5, &mut ChaCha12Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }

    #[test]
    fn block_code_validation() {
        assert!(BlockCode::new(3, 1, &[vec![1, 1, 0]]).is_err()); // not power of two
        assert!(BlockCode::new(4, 2, &[vec![1, 1, 0, 0], vec![1, 1, 0, 0]]).is_err()); // rank
        assert!(BlockCode::new(4, 4, &[]).is_err()); // R < Q
        let code = BlockCode::default_example();
        assert!(code.is_codeword(&[0, 0, 0, 0]));
        assert!(code.is_codeword(&[1, 1, 1, 1]));
        assert!(!code.is_codeword(&[1, 0, 0, 0]));
    }

    #[test]
    fn sampled_blocks_satisfy_check() {
        let code = BlockCode::default_example();
        let meas = BlockCodeMeasure::new(code.clone(), false);
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let w = meas.code_sample(16, &mut rng);
        for chunk in w.cells().chunks(4) {
            assert!(code.is_codeword(chunk));
        }
    }

    #[test]
    fn repetition_code_membership_examples() {
        let rep = BlockCode::new(2, 1, &[vec![1, 1]]).unwrap();
        let w = BitWindow::new(1, vec![0, 0, 1, 1, 0, 0, 1, 1]);
        assert_eq!(code_membership(&w, &rep).unwrap(), Some(0));
        let w = BitWindow::new(1, vec![0, 1, 1, 0, 0, 1]);
        assert_eq!(code_membership(&w, &rep).unwrap(), Some(1));
        let w = BitWindow::new(1, vec![0, 1, 0, 1, 1, 1, 0, 1]);
        assert_eq!(code_membership(&w, &rep).unwrap(), None);
        let short = BitWindow::new(1, vec![0, 0, 1]);
        assert!(code_membership(&short, &rep).is_err());
    }
}
