//! Nonlinear finite-element solver for hyperelastic benchmarks with
//! transformed Newton residuals.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod harness;
pub mod kinematics;
pub mod materials;
pub mod metrics;
pub mod output;
pub mod solver;
pub mod sparse;
pub mod transforms;

pub use error::{Error, Result};
