//! Interval-based redispatch of a transmission grid with flexible heating
//! systems: heat pumps in buildings and district heating portfolios.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjust;
pub mod district;
pub mod engine;
pub mod error;
pub mod grid;
pub mod heatpump;
pub mod lp;
pub mod market;
pub mod pipeline;
pub mod report;
pub mod scenario;
pub mod units;

pub use error::{Error, Result};
