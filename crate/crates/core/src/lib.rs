// `!(x > 0.0)` is the NaN-rejecting form used throughout the argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocking;
pub mod bounds;
pub mod config;
pub mod erm;
pub mod error;
pub mod harness;
pub mod law;
pub mod linalg;
pub mod processgen;
pub mod seed;

pub use error::{Error, Result};
