//! Benchmark harness for the compact min-knapsack toolkit.
//!
//! [`run_benchmark`] solves every (instance, model) pair of a [`BenchConfig`]
//! on a worker pool and streams [`RunRecord`]s to `records.csv`. The
//! [`emit`] functions turn records into the gap curve, the
//! compactness/imprecision scatter, the fractionality table and a
//! performance profile, each as CSV with an SVG drawn from it.

pub mod config;
pub mod emit;
pub mod error;
pub mod record;
pub mod runner;
pub mod solve;
pub mod svg;

pub use config::{BenchConfig, InstanceSource, ModelJob, ModelKind, ModelSpec};
pub use error::{BenchError, Result};
pub use record::RunRecord;
pub use runner::{run_benchmark, BenchRun};
pub use solve::{solve_job, Outcome, RunStatus};
