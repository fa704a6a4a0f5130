//! Spectral simulator and verification harness for the abstract Kirchhoff
//! equation `u'' + m(|A^{1/2}u|²) A u = 0`.
//!
//! The operator `A` is modelled by a finite list of eigenvalues, so every
//! computation runs on a Galerkin truncation. On top of the simulator the
//! crate evaluates the energy functionals, continuous-dependence constants,
//! guaranteed existence times and life-span lower bounds that make the
//! almost-global-existence theory quantitative, and checks them against
//! simulation.

// `!(x <= y)` is deliberate throughout: it rejects NaN along with the bad case.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod comparison;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod integrator;
pub mod model;
pub mod operator;

pub use error::{Error, Result};
