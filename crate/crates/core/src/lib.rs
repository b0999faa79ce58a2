//! Channel-estimation laboratory for conditionally Gaussian massive-MIMO
//! channels: genie, gridded, structured, fast and learned CNN estimators,
//! plus the channel simulator, baselines and experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod numerics;
pub mod rng;
pub mod channel;
pub mod estimators;
pub mod learning;
pub mod model_io;
pub mod metrics;
pub mod baselines;
pub mod harness;

pub use error::{Error, Result};
