//! Linear model, LP relaxation, branch and bound and the enumeration oracle.

mod bnb;
mod enumerate;
mod model;
mod simplex;

pub use bnb::{solve_mip, MipLimits, INT_TOL, PRUNE_TOL};
pub use enumerate::{enumerate_exact, MAX_ENUM_N};
pub use model::{build_mkpc, LinearProgram, Row, Sense, SolutionVector, SolveReport, SolveStatus};
pub use simplex::{solve_lp, solve_lp_with, LpOptions};
