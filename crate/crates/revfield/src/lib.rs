//! Classification, enumeration and realization of generic reversible
//! polynomial vector fields `iP(z) d/dz` with real monic `P` and no `z^k`
//! term.
//!
//! The crate computes, for a concrete parameter vector `ε`:
//!
//! * the combinatorial invariant — a non-crossing involution on the ends at
//!   infinity ([`combinatorics`], [`classification`]);
//! * the analytic invariant — homoclinic periods, vertical strip widths and
//!   transversal times ([`classification`]);
//!
//! and, inversely, a parameter vector realizing a prescribed pair of
//! invariants ([`realization`]). Explicit bifurcation loci for degrees 3
//! and 4 live in [`bifurcation`].

pub mod bifurcation;
pub mod classification;
pub mod combinatorics;
pub mod config;
pub mod error;
pub mod field;
pub mod realization;

pub use config::Config;
pub use error::{Error, Result};
