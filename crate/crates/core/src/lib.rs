// Validation uses `!(x > 0.0)` on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod electre;
pub mod engine;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod policies;
pub mod rng;
pub mod topology;
pub mod workload;

pub use error::{Error, Result};
