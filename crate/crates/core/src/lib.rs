//! Workload-aware differentially private synthetic data.
//!
//! The [`aim`] module holds the adaptive select-measure-estimate mechanism;
//! [`pgm`] holds the graphical-model estimator it builds on.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aim;
pub mod baselines;
pub mod data;
pub mod error;
pub mod eval;
pub mod pgm;
pub mod privacy;
pub mod uncertainty;

pub use error::{Error, Result};
