//! Order computation for indeterminate Hamburger moment sequences.
//!
//! A Hamburger Hamiltonian is a piecewise-constant, rank-one, trace-normalised
//! Hamiltonian on `[0, x_∞)` built from a sequence of interval lengths `l_n`
//! and angles `φ_n`. When the lengths are summable (limit circle case) the
//! monodromy matrix of the associated canonical system is the Nevanlinna
//! matrix of an indeterminate moment problem, and all four of its entries are
//! entire functions of the same order `ρ ∈ [0, 1]`.
//!
//! This crate computes everything around that number at desk scale:
//!
//! - rule-based lazy sequences and the Hamiltonian data model ([`sequences`]),
//! - the three-term-recurrence side: orthogonal polynomials, Jacobi
//!   parameters, moments, and the conversions between them ([`recurrence`]),
//! - overflow-free transfer-matrix products and a numerical order estimator
//!   from the growth of `ln ln max |W_ij(iR)|` ([`monodromy`]),
//! - the growth/decay indices `Δ*`, `Δ`, `δ(·,α)`, `Λ` and friends
//!   ([`indices`]),
//! - closed-form upper/lower order bounds, the regular-case order formula,
//!   and a certificate built from cut-off approximants with explicit weight
//!   sequences ([`bounds`]),
//! - interval-covering machinery for diagonal Hamiltonians, including an
//!   exact covering optimiser and a covering-based order estimator
//!   ([`coverings`]),
//! - generators for the named example families with attached ground-truth
//!   expectations ([`families`]).
//!
//! The crate is `no_std`-compatible (requires `alloc`); enable the `libm`
//! feature for float math without `std`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod bounds;
pub mod coverings;
pub mod error;
pub mod families;
pub mod indices;
pub mod monodromy;
pub mod numeric;
pub mod recurrence;
pub mod sequences;

pub use error::{Error, Result};
pub use sequences::{HamburgerHamiltonian, FiniteRankHamiltonian, SequenceSpec};
