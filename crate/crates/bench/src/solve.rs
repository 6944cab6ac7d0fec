//! Runs one model on one instance.

use std::time::{Duration, Instant};

use compactknap::cuts::separation_procedure;
use compactknap::lp::{build_mkpc, solve_lp_with, solve_mip, LpOptions, MipLimits, SolveReport, SolveStatus};
use compactknap::sdp::{
    add_misc_cut, add_strengthening, build_naive, build_penalized, solve_conic, ConicOptions, ConicProgram, ConicReport,
    ConicStatus, LiftedSolution,
};
use compactknap::{Instance, Selection};
use serde::{Deserialize, Serialize};

use crate::config::ModelJob;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Optimal,
    /// Conic solve stopped early with an iterate inside the accuracy contract.
    NearOptimal,
    Infeasible,
    TimeLimit,
    IterationLimit,
    Failed,
}

impl RunStatus {
    pub fn is_solved(&self) -> bool {
        matches!(self, RunStatus::Optimal | RunStatus::NearOptimal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutInfo {
    pub lp_value: f64,
    pub dp_value: Option<f64>,
    /// Items in the cut's support, 1-based.
    pub outside: Selection,
}

/// Result of one solve, before metrics.
#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub status: RunStatus,
    pub objective: Option<f64>,
    /// Valid lower bound on the integer optimum, when the model gives one.
    pub bound: Option<f64>,
    /// Solution vector, or the diagonal of `X` for conic models.
    pub x: Option<Vec<f64>>,
    /// Diagonal before any MISC round.
    pub x_initial: Option<Vec<f64>>,
    pub cuts: Vec<CutInfo>,
    /// Separation result that ended the MISC loop without a cut.
    pub final_separation: Option<CutInfo>,
    pub iterations: usize,
    #[serde(serialize_with = "secs")]
    pub wall_time: Duration,
}

fn secs<S: serde::Serializer>(d: &Duration, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

pub fn build_conic(inst: &Instance, job: &ModelJob) -> Result<ConicProgram> {
    let base = if job.kind.is_penalized() {
        build_penalized(inst, job.lambda.unwrap_or(crate::config::DEFAULT_LAMBDA))?
    } else {
        build_naive(inst)
    };
    if job.tiers.is_empty() {
        return Ok(base);
    }
    Ok(add_strengthening(&base, inst, &job.tiers, job.triple_window)?)
}

fn lp_status(s: SolveStatus) -> RunStatus {
    match s {
        SolveStatus::Optimal => RunStatus::Optimal,
        SolveStatus::Infeasible => RunStatus::Infeasible,
        SolveStatus::IterationLimit => RunStatus::IterationLimit,
        SolveStatus::TimeLimit => RunStatus::TimeLimit,
    }
}

fn conic_status(s: ConicStatus) -> RunStatus {
    match s {
        ConicStatus::Optimal => RunStatus::Optimal,
        ConicStatus::NearOptimal => RunStatus::NearOptimal,
        ConicStatus::IterationLimit => RunStatus::IterationLimit,
        ConicStatus::TimeLimit => RunStatus::TimeLimit,
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn from_linear(r: SolveReport, bound: Option<f64>) -> Outcome {
    Outcome {
        status: lp_status(r.status),
        objective: finite(r.objective),
        bound,
        x: r.solution.map(|s| s.values),
        x_initial: None,
        cuts: Vec::new(),
        final_separation: None,
        iterations: r.iterations.max(r.nodes),
        wall_time: r.wall_time,
    }
}

/// Solves `job` on `inst`. Solver breakdowns come back as errors; limits come
/// back as statuses with whatever the solver had.
pub fn solve_job(inst: &Instance, job: &ModelJob, time_limit: Option<Duration>) -> Result<Outcome> {
    job.validate()?;
    compactknap::ensure_valid(inst)?;
    let start = Instant::now();
    let deadline = time_limit.map(|t| start + t);
    match job.kind {
        crate::config::ModelKind::Lp => {
            let r = solve_lp_with(&build_mkpc(inst), &LpOptions { max_iter: None, deadline })?;
            let bound = (r.status == SolveStatus::Optimal).then_some(r.objective);
            Ok(from_linear(r, bound))
        }
        crate::config::ModelKind::Mip => {
            let r = solve_mip(&build_mkpc(inst), &MipLimits { time_limit, node_limit: None })?;
            let bound = finite(r.bound);
            Ok(from_linear(r, bound))
        }
        _ => solve_conic_job(inst, job, start, deadline),
    }
}

fn remaining(deadline: Option<Instant>) -> Option<Duration> {
    deadline.map(|d| d.saturating_duration_since(Instant::now()))
}

fn solve_conic_job(inst: &Instance, job: &ModelJob, start: Instant, deadline: Option<Instant>) -> Result<Outcome> {
    let mut program = build_conic(inst, job)?;
    let (mut sol, mut report) = solve_conic(&program, &ConicOptions::default().with_time_limit(remaining(deadline)))?;
    let mut iterations = report.iterations;
    let x_initial = (job.misc_rounds > 0).then(|| sol.diag.clone());
    let mut cuts = Vec::new();
    let mut final_separation = None;
    for _ in 0..job.misc_rounds {
        if !conic_status(report.status).is_solved() {
            break;
        }
        let sep = separation_procedure(inst, &sol)?;
        let Some(cut) = sep.cut else {
            final_separation = Some(CutInfo { lp_value: sep.lp_value, dp_value: sep.dp_value, outside: Selection::new([]) });
            break;
        };
        add_misc_cut(&mut program, &cut.subset);
        cuts.push(CutInfo { lp_value: sep.lp_value, dp_value: sep.dp_value, outside: cut.outside });
        let (s, r): (LiftedSolution, ConicReport) =
            solve_conic(&program, &ConicOptions::default().with_time_limit(remaining(deadline)))?;
        iterations += r.iterations;
        sol = s;
        report = r;
    }
    let status = conic_status(report.status);
    // Penalized objectives trade feasibility for compactness, so they bound
    // nothing.
    let bound = if job.kind.is_penalized() { None } else { finite(report.bound) };
    Ok(Outcome {
        status,
        objective: finite(report.objective),
        bound,
        x: Some(sol.diag),
        x_initial,
        cuts,
        final_separation,
        iterations,
        wall_time: start.elapsed(),
    })
}
