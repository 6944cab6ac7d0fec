use std::time::Duration;

use compactknap_conic::svec::{svec_index, svec_len, SQRT2};
use compactknap_conic::{ConeProblem, Settings, SparseVec, Status};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lp::Sense;
use crate::sdp::lifted::{EigenSummary, LiftedSolution};
use crate::sdp::model::ConicProgram;

/// Contract the backend result is judged against.
pub const CONTRACT_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct ConicOptions {
    pub settings: Settings,
}

impl Default for ConicOptions {
    fn default() -> Self {
        ConicOptions { settings: Settings::default() }
    }
}

impl ConicOptions {
    pub fn with_time_limit(mut self, limit: Option<Duration>) -> Self {
        self.settings.time_limit = limit;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConicStatus {
    Optimal,
    /// The backend stopped early but the iterate meets the contract.
    NearOptimal,
    IterationLimit,
    TimeLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConicReport {
    pub status: ConicStatus,
    pub objective: f64,
    /// Dual objective; a valid lower bound when the dual residual is small.
    pub bound: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub relative_gap: f64,
    pub eigen: EigenSummary,
    pub iterations: usize,
    #[serde(serialize_with = "ser_secs")]
    pub wall_time: Duration,
}

fn ser_secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl ConicReport {
    pub fn meets_contract(&self) -> bool {
        self.primal_residual <= CONTRACT_TOL && self.relative_gap <= CONTRACT_TOL && self.eigen.min >= -CONTRACT_TOL
    }
}

/// Standard-form data: `Gv + s = h` with the orthant part from the rows and
/// the PSD part producing `Y`.
pub fn to_cone_problem(prog: &ConicProgram) -> Result<ConeProblem> {
    let n = prog.n;
    let nv = svec_len(n);
    if prog.objective.len() != nv {
        return Err(invalid("objective length does not match svec size"));
    }
    let mut lp_rows = Vec::with_capacity(prog.rows.len());
    let mut h_lp = Vec::with_capacity(prog.rows.len());
    for row in &prog.rows {
        let sign = match row.sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => return Err(invalid("conic rows must be inequalities")),
        };
        lp_rows.push(SparseVec { idx: row.coefs.idx.clone(), val: row.coefs.val.iter().map(|v| sign * v).collect() });
        h_lp.push(sign * row.rhs);
    }
    let mut psd_cols = Vec::with_capacity(nv);
    for j in 0..n {
        for i in 0..=j {
            let mut col = SparseVec::new();
            let (p, r) = (i + 1, j + 1);
            if i == j {
                col.push(svec_index(0, p), -SQRT2);
                col.push(svec_index(p, p), -1.0);
            } else {
                col.push(svec_index(p, r), -1.0);
            }
            psd_cols.push(col);
        }
    }
    let mut h_psd = vec![0.0; svec_len(n + 1)];
    h_psd[svec_index(0, 0)] = 1.0;
    Ok(ConeProblem { c: prog.objective.clone(), lp_rows, h_lp, psd_order: n + 1, psd_cols, h_psd })
}

pub fn solve_conic(prog: &ConicProgram, opts: &ConicOptions) -> Result<(LiftedSolution, ConicReport)> {
    let cone = to_cone_problem(prog)?;
    let sol = compactknap_conic::solve(&cone, &opts.settings).map_err(|e| Error::SolverFailure(e.to_string()))?;
    let lifted = LiftedSolution::from_svec(&sol.x, prog.n);
    let mut report = ConicReport {
        status: ConicStatus::Optimal,
        objective: sol.primal_objective,
        bound: if sol.dual_residual <= CONTRACT_TOL { sol.dual_objective } else { f64::NEG_INFINITY },
        primal_residual: sol.primal_residual,
        dual_residual: sol.dual_residual,
        relative_gap: sol.relative_gap,
        eigen: lifted.eigen_summary(),
        iterations: sol.iterations,
        wall_time: sol.solve_time,
    };
    report.status = match sol.status {
        Status::Optimal => ConicStatus::Optimal,
        _ if report.meets_contract() && sol.dual_residual <= CONTRACT_TOL => ConicStatus::NearOptimal,
        Status::MaxIterations => ConicStatus::IterationLimit,
        Status::TimeLimit => ConicStatus::TimeLimit,
        Status::NumericalFailure => {
            return Err(Error::SolverFailure(format!(
                "numerical breakdown after {} iterations (pres {:.1e}, dres {:.1e}, gap {:.1e})",
                sol.iterations, sol.primal_residual, sol.dual_residual, sol.relative_gap
            )))
        }
        Status::PrimalInfeasible => return Err(Error::SolverFailure("program is infeasible".to_string())),
        Status::DualInfeasible => return Err(Error::SolverFailure("program is unbounded".to_string())),
    };
    Ok((lifted, report))
}
