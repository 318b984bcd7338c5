//! Convection-diffusion in truncated cylinders with coefficients that are
//! periodic in the axial direction away from a bounded middle zone.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cell;
pub mod coefficients;
pub mod cylinder;
pub mod demos;
pub mod discretize;
pub mod error;
pub mod fit;
pub mod geometry;
pub mod linalg;

pub use error::{Error, Result};
