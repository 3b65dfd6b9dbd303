//! Imaginary sl(n) Toda conformal field theory: exact lattice kinematics,
//! Upsilon-function numerics, hypergeometric conformal blocks, three-point
//! structure constants, non-scalar field classification and crossing
//! verification.
//!
//! The crate is organized bottom-up:
//!
//! - [`exact`]: rational arithmetic on the span of `{1, b, 1/b}`.
//! - [`lattice`]: sl(n) root/weight lattices, Weyl group, charges.
//! - [`kinematics`]: central charge, conformal weights, W3 charge,
//!   degenerate fusion rules, genericity.
//! - [`special`]: gamma-function ratios, the Upsilon function and the
//!   double Gamma function in log space with zero/pole order bookkeeping.
//! - [`pfq`], [`ode`], [`blocks`]: generalized hypergeometric series,
//!   Fuchsian transport, conformal blocks and their connection matrix.
//! - [`constants`]: semi-degenerate three-point structure constants and
//!   shift-equation residuals.
//! - [`fields`]: non-scalar field labels, their exact lattice constraints,
//!   monodromy charges and fusion.
//! - [`crossing`]: monodromy-invariant gluing of blocks and crossing
//!   residuals.

pub mod blocks;
pub mod constants;
pub mod crossing;
pub mod error;
pub mod exact;
pub mod fields;
pub mod kinematics;
pub mod lattice;
pub mod ode;
pub mod pfq;
pub mod special;

pub use error::{Result, TodaError};
