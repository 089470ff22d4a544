//! Gradient-based uncertainty metrics for small convolutional classifiers.
//!
//! The crate trains a fixed three-conv-layer CNN, extracts per-sample
//! statistics of the loss gradient at the predicted label, and evaluates
//! meta classifiers that separate correct from incorrect predictions and
//! in-distribution from out-of-distribution inputs.

pub mod container;
pub mod data;
pub mod error;
pub mod experiment;
pub mod fsutil;
pub mod meta;
pub mod metrics;
pub mod nn;
pub mod seed;

pub use error::{Error, Result};
