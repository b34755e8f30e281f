#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinatorics;
pub mod construction;
pub mod error;
pub mod harness;
pub mod numeric;
pub mod orlicz;
pub mod piecewise;

pub use error::{Error, Result};
