//! Distributed fixed-point iterations over directed, unbalanced networks.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dop;
pub mod dot;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod network;
pub mod operators;

pub use error::{Error, Result};
