//! Batch Levenberg-Marquardt and incremental Bayes-tree smoothing.

mod batch;
mod incremental;
mod stats;

pub use batch::{batch_solve, BatchParams, BatchResult};
pub use incremental::{IncrementalParams, IncrementalSmoother, UpdateInput, UpdateOutput};
pub use stats::SmootherStats;
