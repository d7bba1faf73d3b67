#![allow(clippy::neg_cmp_op_on_partial_ord)] // negated comparisons reject NaN
//! Logarithmic sensitivity integrals and robustness bounds for SISO feedback
//! loops with dead time.

pub mod bounds;
pub mod casebook;
pub mod error;
pub mod indices;
pub mod integral;
pub mod lti;
pub mod report;
pub mod shaping;

pub use error::{Error, Result};
