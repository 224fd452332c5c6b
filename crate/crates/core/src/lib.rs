//! Incremental smoothing backend for SLAM with moving objects.

pub mod error;
pub mod eval;
pub mod exec;
pub mod experiment;
pub mod factors;
pub mod formulations;
pub mod geometry;
pub mod graph;
pub mod parallel;
pub mod sim;
pub mod smoothers;

pub use error::{Error, Result};
