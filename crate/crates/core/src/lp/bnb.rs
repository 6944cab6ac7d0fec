//! Best-first branch and bound over binary variables, one LP solve per node.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::Result;
use crate::lp::model::{LinearProgram, SolutionVector, SolveReport, SolveStatus};
use crate::lp::simplex::{solve_lp_with, LpOptions};

pub const INT_TOL: f64 = 1e-6;
pub const PRUNE_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Default)]
pub struct MipLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<usize>,
}

struct Node {
    bound: f64,
    seq: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    x: Vec<f64>,
    value: f64,
}

fn try_candidate(lp: &LinearProgram, cand: Vec<f64>, inc: &mut Option<Incumbent>) {
    if lp.max_violation(&cand) > FEAS_TOL {
        return;
    }
    let cand = trim(lp, cand);
    let value = lp.objective_value(&cand);
    if inc.as_ref().is_none_or(|i| value < i.value - PRUNE_TOL) {
        *inc = Some(Incumbent { x: cand, value });
    }
}

/// Drops ones from a feasible binary point, most expensive first, while it
/// stays feasible.
fn trim(lp: &LinearProgram, mut x: Vec<f64>) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).filter(|&j| x[j] == 1.0 && lp.objective[j] > 0.0).collect();
    order.sort_by(|&a, &b| lp.objective[b].total_cmp(&lp.objective[a]).then(a.cmp(&b)));
    for j in order {
        if lp.lower[j] > 0.0 {
            continue;
        }
        x[j] = 0.0;
        if lp.max_violation(&x) > FEAS_TOL {
            x[j] = 1.0;
        }
    }
    x
}

/// Rounding heuristics: round every positive entry up, and fill the whole
/// index range between the first and last positive entries.
fn heuristics(lp: &LinearProgram, x: &[f64], inc: &mut Option<Incumbent>) {
    let up: Vec<f64> = x.iter().map(|&v| if v > INT_TOL { 1.0 } else { 0.0 }).collect();
    try_candidate(lp, up.clone(), inc);
    if let (Some(first), Some(last)) = (up.iter().position(|&v| v == 1.0), up.iter().rposition(|&v| v == 1.0)) {
        let mut fill = up;
        fill[first..=last].iter_mut().for_each(|v| *v = 1.0);
        try_candidate(lp, fill, inc);
    }
}

/// Branching variable: the fractional entry closest to 1/2, lowest index on
/// ties.
fn branch_var(x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in x.iter().enumerate() {
        if (v - v.round()).abs() > INT_TOL {
            let dist = (v - 0.5).abs();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((j, dist));
            }
        }
    }
    best.map(|(j, _)| j)
}

/// Exact binary optimum of `lp` (all variables treated as binary).
pub fn solve_mip(lp: &LinearProgram, limits: &MipLimits) -> Result<SolveReport> {
    let start = Instant::now();
    let deadline = limits.time_limit.map(|t| start + t);
    let integral_costs = lp.objective.iter().all(|c| c.fract() == 0.0);
    let lower: Vec<f64> = lp.lower.iter().map(|v| v.max(0.0).ceil()).collect();
    let upper: Vec<f64> = lp.upper.iter().map(|v| v.min(1.0).floor()).collect();

    let mut heap = BinaryHeap::new();
    heap.push(Node { bound: f64::NEG_INFINITY, seq: 0, lower, upper });
    let mut seq = 1;
    let mut inc: Option<Incumbent> = None;
    let mut nodes = 0;
    let mut iterations = 0;
    let mut status = SolveStatus::Optimal;
    let mut open_bound = f64::INFINITY;

    while let Some(node) = heap.pop() {
        if inc.as_ref().is_some_and(|i| node.bound >= i.value - PRUNE_TOL) {
            continue;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) || limits.node_limit.is_some_and(|l| nodes >= l) {
            status = SolveStatus::TimeLimit;
            open_bound = node.bound;
            break;
        }
        nodes += 1;
        let mut sub = lp.clone();
        sub.lower.clone_from(&node.lower);
        sub.upper.clone_from(&node.upper);
        let rep = solve_lp_with(&sub, &LpOptions { deadline, ..LpOptions::default() })?;
        iterations += rep.iterations;
        match rep.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::IterationLimit | SolveStatus::TimeLimit => {
                status = SolveStatus::TimeLimit;
                open_bound = node.bound;
                break;
            }
        }
        let x = rep.solution.expect("optimal LP has a point").values;
        let mut bound = rep.objective;
        if integral_costs {
            bound = (bound - INT_TOL).ceil();
        }
        if inc.as_ref().is_some_and(|i| bound >= i.value - PRUNE_TOL) {
            continue;
        }
        match branch_var(&x) {
            None => {
                let xi: Vec<f64> = x.iter().map(|v| v.round()).collect();
                try_candidate(lp, xi, &mut inc);
            }
            Some(j) => {
                heuristics(lp, &x, &mut inc);
                for v in [0.0, 1.0] {
                    let mut lo = node.lower.clone();
                    let mut hi = node.upper.clone();
                    lo[j] = v;
                    hi[j] = v;
                    heap.push(Node { bound, seq, lower: lo, upper: hi });
                    seq += 1;
                }
            }
        }
    }

    let remaining = heap.iter().map(|nd| nd.bound).fold(open_bound, f64::min);
    let wall_time = start.elapsed();
    Ok(match inc {
        Some(i) => {
            let bound = if status == SolveStatus::Optimal { i.value } else { remaining.min(i.value) };
            SolveReport {
                status,
                objective: i.value,
                bound,
                solution: Some(SolutionVector { values: i.x, objective: i.value, source: "mip".to_string() }),
                nodes,
                iterations,
                wall_time,
            }
        }
        None => SolveReport {
            status: if status == SolveStatus::Optimal { SolveStatus::Infeasible } else { status },
            objective: f64::NAN,
            bound: if status == SolveStatus::Optimal { f64::INFINITY } else { remaining },
            solution: None,
            nodes,
            iterations,
            wall_time,
        },
    })
}
