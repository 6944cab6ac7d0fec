//! Min-knapsack with compactness constraints.
//!
//! Items `0..n` carry integer weights and nonnegative costs; a selection must
//! reach weight `q`, and two selected items more than `delta` apart need
//! enough selected items between them. This crate holds the data model, the
//! linear and semidefinite relaxations, separation of maximal insufficient
//! subset cuts and the solution-quality metrics.

pub mod cuts;
pub mod error;
pub mod instance;
pub mod instgen;
pub mod lp;
pub mod metrics;
pub mod sdp;

pub use error::{Error, Result};
pub use instance::{
    check_selection, compactness_pairs, complement_instance, ensure_valid, validate_instance, FeasibilityReport, Instance, Meta,
    PairCoefficient, Selection,
};
