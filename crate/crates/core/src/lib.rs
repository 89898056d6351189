// Negated comparisons are how NaN residuals are made to fail.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerical verification of para-hyperhermitian structures.
//!
//! The crate works chart-locally: every geometric object is a field on an
//! axis-aligned coordinate box, and every identity is checked by sampling
//! points and measuring max-abs residuals. Constant-coefficient data takes an
//! exact path with no finite differencing at all.

pub mod algebra;
pub mod catalog;
pub mod constructions;
pub mod error;
pub mod mixed3;
pub mod report;
pub mod structures;
pub mod tangent;
pub mod smooth;

pub use error::{Error, Result};
