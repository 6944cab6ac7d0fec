//! Semidefinite relaxations over the lifted matrix and their solution.

mod lifted;
mod model;
mod solve;

pub use lifted::{verify_lifted_integrality, EigenSummary, IntegralityVerdict, LiftedSolution};
pub use model::{
    add_misc_cut, add_strengthening, build_naive, build_penalized, ConicProgram, ConicRow, EntryRow, ModelKind, RowKind, Tier,
    TripleWindow,
};
pub use solve::{solve_conic, to_cone_problem, ConicOptions, ConicReport, ConicStatus, CONTRACT_TOL};
