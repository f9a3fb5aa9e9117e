//! Cone-constrained linear-quadratic control of a scalar state with a single
//! default jump.

// `!(x >= 0.0)` style comparisons are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod hamiltonian;
pub mod meanvariance;
pub mod model;
pub mod riccati;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
