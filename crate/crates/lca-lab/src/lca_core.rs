//! GF(2) sequence arithmetic and shift-polynomial algebra.
//!
//! A linear cellular automaton is a polynomial of shift maps with GF(2)
//! coefficients: a finite support set `V ⊂ Z` acting by
//! `(Φ a)_z = XOR_{v∈V} a_{z+v}`.  Composition of automata is polynomial
//! multiplication, and over GF(2) powers obey the freshman's dream:
//! squaring doubles every offset.

use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoreError {
    /// Multiplication and powers of the zero polynomial are rejected; it may
    /// only arise transiently from GF(2) cancellation in `add`.
    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,
    #[error("window of length {len} too short for stencil span {span}")]
    WindowTooShort { len: usize, span: i64 },
}

/// An LCA as an element of GF(2)[σ, σ⁻¹]: the set of shift offsets with
/// coefficient one, kept sorted ascending.  Empty support is the zero
/// polynomial.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ShiftPolynomial {
    support: Vec<i64>,
}

impl ShiftPolynomial {
    /// Builds a polynomial from offsets, reducing multiplicities mod 2.
    pub fn new<I: IntoIterator<Item = i64>>(offsets: I) -> Self {
        let mut set = BTreeSet::new();
        for v in offsets {
            if !set.insert(v) {
                set.remove(&v);
            }
        }
        Self {
            support: set.into_iter().collect(),
        }
    }

    /// The identity automaton, σ⁰.
    pub fn identity() -> Self {
        Self { support: vec![0] }
    }

    /// The Ledrappier automaton 1 + σ.
    pub fn ledrappier() -> Self {
        Self { support: vec![0, 1] }
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    /// max(support) − min(support); zero for the zero polynomial.
    pub fn span(&self) -> i64 {
        match (self.support.first(), self.support.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0,
        }
    }

    /// GF(2) addition: symmetric difference of supports.
    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.support.iter().chain(other.support.iter()).copied())
    }

    /// GF(2) multiplication: `{u+v}` reduced mod 2 multiplicity.
    /// Composition of the corresponding automata.
    pub fn mul(&self, other: &Self) -> Result<Self, CoreError> {
        if self.is_zero() || other.is_zero() {
            return Err(CoreError::ZeroPolynomial);
        }
        let mut set = BTreeSet::new();
        for &u in &self.support {
            for &v in &other.support {
                let s = u + v;
                if !set.insert(s) {
                    set.remove(&s);
                }
            }
        }
        Ok(Self {
            support: set.into_iter().collect(),
        })
    }

    /// n-th power by square-and-multiply; squaring doubles every offset.
    pub fn pow(&self, n: u64) -> Result<Self, CoreError> {
        if self.is_zero() {
            return Err(CoreError::ZeroPolynomial);
        }
        let mut acc = Self::identity();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = Self {
                    support: base.support.iter().map(|v| 2 * v).collect(),
                };
            }
        }
        Ok(acc)
    }

    /// Applies the stencil to a finite window.  Only coordinates whose full
    /// stencil fits inside the input are emitted, so windows shrink by
    /// `span` and the base moves to `base - min(support)`.
    pub fn apply(&self, w: &BitWindow) -> Result<BitWindow, CoreError> {
        if self.is_zero() {
            return Ok(BitWindow::new(w.base(), vec![0; w.len()]));
        }
        let span = self.span();
        if (w.len() as i64) <= span {
            return Err(CoreError::WindowTooShort { len: w.len(), span });
        }
        let min = self.support[0];
        let out_len = w.len() - span as usize;
        let mut cells = Vec::with_capacity(out_len);
        for i in 0..out_len {
            let mut bit = 0u8;
            for &v in &self.support {
                bit ^= w.cells()[i + (v - min) as usize];
            }
            cells.push(bit);
        }
        Ok(BitWindow::new(w.base() - min, cells))
    }

    /// `Φ^n` applied to a window: `apply(pow(n), w)`.
    pub fn apply_power(&self, n: u64, w: &BitWindow) -> Result<BitWindow, CoreError> {
        self.pow(n)?.apply(w)
    }

    /// `Φ^n` on a periodic configuration; offsets wrap mod the length.
    pub fn cyclic_apply_power(&self, n: u64, c: &CyclicConfig) -> Result<CyclicConfig, CoreError> {
        let p = self.pow(n)?;
        let len = c.len() as i64;
        let cells = (0..len)
            .map(|z| {
                p.support
                    .iter()
                    .fold(0u8, |acc, &l| acc ^ c.cells()[(z + l).rem_euclid(len) as usize])
            })
            .collect();
        Ok(CyclicConfig::new(cells))
    }
}

/// C(big, small) mod 2 via Lucas: odd iff every binary digit of `n` is
/// dominated by the corresponding digit of `big_n`.
pub fn lucas_binomial(big_n: u64, n: u64) -> bool {
    n & !big_n == 0
}

/// `L(n) = {ℓ : ℓ ≪ n}` — all subset-sums of the set bits of `n`.
/// Equals the support of `(1+σ)^n`.
pub fn lucas_support(n: u64) -> Vec<i64> {
    let mut sums = vec![0i64];
    for i in 0..64 {
        if n >> i & 1 == 1 {
            let bit = 1i64 << i;
            let more: Vec<i64> = sums.iter().map(|s| s + bit).collect();
            sums.extend(more);
        }
    }
    sums.sort_unstable();
    sums
}

/// A finite contiguous block of GF(2) cells; the cell at array index `i`
/// is coordinate `base + i` of a point of the full shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitWindow {
    base: i64,
    cells: Vec<u8>,
}

impl BitWindow {
    pub fn new(base: i64, cells: Vec<u8>) -> Self {
        debug_assert!(cells.iter().all(|&b| b <= 1));
        Self { base, cells }
    }

    pub fn base(&self) -> i64 {
        self.base
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn into_cells(self) -> Vec<u8> {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell at absolute coordinate `z`, if inside the window.
    pub fn get(&self, z: i64) -> Option<u8> {
        if z < self.base {
            return None;
        }
        self.cells.get((z - self.base) as usize).copied()
    }
}

/// Periodic boundary configuration for long-run iteration and imagery.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicConfig {
    cells: Vec<u8>,
}

impl CyclicConfig {
    pub fn new(cells: Vec<u8>) -> Self {
        assert!(!cells.is_empty(), "cyclic configuration must be non-empty");
        debug_assert!(cells.iter().all(|&b| b <= 1));
        Self { cells }
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }
}

/// Little-endian binary digits with no trailing zeros beyond the top set bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryExpansion {
    digits: Vec<u8>,
}

impl BinaryExpansion {
    pub fn of(n: u64) -> Self {
        let mut digits = Vec::new();
        let mut v = n;
        while v > 0 {
            digits.push((v & 1) as u8);
            v >>= 1;
        }
        Self { digits }
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn digit(&self, i: usize) -> u8 {
        self.digits.get(i).copied().unwrap_or(0)
    }

    pub fn value(&self) -> u64 {
        self.digits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &d)| acc | ((d as u64) << i))
    }
}
