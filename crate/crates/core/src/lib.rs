//! Discrete analysis of second-order damped evolution equations
//! `ü + Au + Bu̇ = 0` through their first-order block form.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod block;
pub mod error;
pub mod evolution;
pub mod forms;
pub mod linalg;
pub mod models;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
