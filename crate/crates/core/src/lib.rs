//! Repeatability evaluation for local feature detectors.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod matching;
pub mod metrics;
pub mod protocol;
pub mod report;
pub mod runner;
