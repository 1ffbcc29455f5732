//! A desk-scale laboratory for linear cellular automata over GF(2).
//!
//! The crate has four layers:
//!
//! * [`lca_core`] — shift-polynomial algebra, bit windows, Lucas-theorem
//!   combinatorics, and fast automaton powers.
//! * [`measures`] — samplers and exact algebra for a hierarchical
//!   zero-entropy measure, block-code measures, and Bernoulli baselines.
//! * [`spectral`] — characters of the full shift group, pullback through
//!   automaton powers, exact and Monte-Carlo character expectations.
//! * [`entropy`] — binary entropy, exact conditional entropies of the
//!   hierarchical measure, and plug-in block-entropy estimation.
//!
//! Convention fixed project-wide: an automaton with support `V` acts by
//! `(Φ a)_z = Σ_{v∈V} a_{z+v}` — the stencil reads rightward.

pub mod entropy;
pub mod lca_core;
pub mod measures;
pub mod spectral;
