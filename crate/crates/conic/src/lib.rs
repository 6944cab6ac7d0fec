//! Primal-dual interior-point solver for programs over the product of a
//! nonnegative orthant and one positive semidefinite cone.
//!
//! The method works on the homogeneous self-dual embedding with
//! Nesterov-Todd scaling and a Mehrotra predictor-corrector step, so
//! infeasible or unbounded programs end with a certificate instead of
//! diverging. Newton systems are reduced to dense normal equations in the
//! primal variables and factored with a recursive Cholesky, which suits
//! problems with at most a few thousand variables and many sparse
//! inequality rows.

pub mod chol;
mod ipm;
mod problem;
pub mod svec;

pub use ipm::{solve, Settings, Solution, Status};
pub use problem::{ConeProblem, SparseVec};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("problem data contains non-finite values")]
    NonFinite,
}
