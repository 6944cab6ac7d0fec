//! Maximal insufficient subset cuts.
//!
//! A subset is insufficient when its weight stays below `q`. Every feasible
//! selection leaves some item outside any insufficient subset, so
//! `sum_{i not in S} X_ii >= 1` is valid; it is strongest when `S` is maximal.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::instance::{Instance, Selection};
use crate::sdp::{add_misc_cut, solve_conic, ConicOptions, ConicProgram, ConicReport, LiftedSolution};

/// A cut is only emitted when the diagonal misses it by more than this.
pub const VIOLATION_TOL: f64 = 1e-9;

const MAX_DP_CELLS: usize = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MiscCut {
    /// The maximal insufficient subset.
    pub subset: Selection,
    /// Items whose diagonal entries must sum to at least one.
    pub outside: Selection,
}

impl MiscCut {
    /// Checks both invariants: `subset` is insufficient and adding any single
    /// outside item makes it sufficient.
    pub fn new(inst: &Instance, subset: Selection) -> Result<Self> {
        if subset.items().iter().any(|&i| i >= inst.n) {
            return Err(invalid("subset index out of range"));
        }
        if !is_insufficient(inst, &subset) {
            return Err(invalid("subset reaches q, so it is not insufficient"));
        }
        if !is_maximal_insufficient(inst, &subset) {
            return Err(invalid("subset is insufficient but not maximal"));
        }
        let outside = crate::instance::complement_selection(&subset, inst.n);
        Ok(MiscCut { subset, outside })
    }

    pub fn lhs(&self, diag: &[f64]) -> f64 {
        self.outside.items().iter().map(|&i| diag[i]).sum()
    }

    pub fn is_violated_by(&self, diag: &[f64]) -> bool {
        self.lhs(diag) < 1.0 - VIOLATION_TOL
    }

    /// Whether a binary selection satisfies the cut.
    pub fn holds_for(&self, sel: &Selection) -> bool {
        sel.items().iter().any(|&i| !self.subset.contains(i))
    }
}

pub fn is_insufficient(inst: &Instance, sel: &Selection) -> bool {
    (sel.weight(inst) as f64) < inst.q
}

pub fn is_maximal_insufficient(inst: &Instance, sel: &Selection) -> bool {
    let w = sel.weight(inst);
    is_insufficient(inst, sel) && (0..inst.n).filter(|&j| !sel.contains(j)).all(|j| (w + inst.weights[j]) as f64 >= inst.q)
}

/// Largest integer weight strictly below `q`.
pub fn budget_for(q: f64) -> i64 {
    if q.fract() == 0.0 {
        q as i64 - 1
    } else {
        q.floor() as i64
    }
}

/// Covering a set `alpha` of weight at most `budget_b` leaves the uncovered
/// diagonal mass `sum (1 - alpha_i) X_ii`; an uncovered mass below one is a
/// violated cut.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationProblem {
    /// Diagonal clipped to `[0, 1]`.
    pub diag_values: Vec<f64>,
    pub int_weights: Vec<u64>,
    pub q: f64,
    pub budget_b: i64,
}

impl SeparationProblem {
    pub fn new(inst: &Instance, diag: &[f64]) -> Result<Self> {
        if diag.len() != inst.n {
            return Err(invalid(format!("diagonal has {} entries, expected {}", diag.len(), inst.n)));
        }
        if diag.iter().any(|v| !v.is_finite()) {
            return Err(invalid("diagonal contains non-finite values"));
        }
        Ok(SeparationProblem {
            diag_values: diag.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            int_weights: inst.weights.clone(),
            q: inst.q,
            budget_b: budget_for(inst.q),
        })
    }

    pub fn total(&self) -> f64 {
        self.diag_values.iter().sum()
    }

    /// Uncovered mass of `alpha`, summed in index order.
    pub fn uncovered(&self, alpha: &Selection) -> f64 {
        self.diag_values.iter().enumerate().filter(|(i, _)| !alpha.contains(*i)).map(|(_, v)| v).sum()
    }
}

/// Continuous lower bound on the separation optimum: fractional covering
/// with the relaxed budget `q`. A value of at least one rules out any cut.
pub fn separation_lp_check(sp: &SeparationProblem) -> f64 {
    let mut order: Vec<usize> = (0..sp.diag_values.len()).collect();
    let ratio = |i: usize| {
        if sp.int_weights[i] == 0 {
            f64::INFINITY
        } else {
            sp.diag_values[i] / sp.int_weights[i] as f64
        }
    };
    order.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)).then(a.cmp(&b)));
    let mut room = sp.q;
    let mut covered = 0.0;
    for i in order {
        let w = sp.int_weights[i] as f64;
        if w <= room {
            covered += sp.diag_values[i];
            room -= w;
        } else {
            covered += sp.diag_values[i] * room / w;
            break;
        }
    }
    (sp.total() - covered).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DpResult {
    pub opt_value: f64,
    pub alpha_set: Selection,
}

/// Exact optimum of the separation knapsack by dynamic programming over the
/// integer budget. Leftover budget is filled with unused items in index
/// order, which keeps the value optimal.
pub fn separation_dp(sp: &SeparationProblem) -> Result<DpResult> {
    let n = sp.diag_values.len();
    if sp.budget_b < 0 {
        return Ok(DpResult { opt_value: sp.total(), alpha_set: Selection::default() });
    }
    let cap = sp.budget_b as usize;
    let width = cap + 1;
    if n.saturating_mul(width) > MAX_DP_CELLS {
        return Err(invalid(format!("separation table of {n} x {width} cells is too large")));
    }
    let words = width.div_ceil(64);
    let mut take = vec![0u64; n * words];
    let mut best = vec![0.0f64; width];
    for i in 0..n {
        let w = sp.int_weights[i] as usize;
        let v = sp.diag_values[i];
        if w > cap || v <= 0.0 {
            continue;
        }
        for c in (w..width).rev() {
            let cand = best[c - w] + v;
            if cand > best[c] {
                best[c] = cand;
                take[i * words + c / 64] |= 1 << (c % 64);
            }
        }
    }
    let mut c = cap;
    let mut alpha = Vec::new();
    for i in (0..n).rev() {
        if take[i * words + c / 64] >> (c % 64) & 1 == 1 {
            alpha.push(i);
            c -= sp.int_weights[i] as usize;
        }
    }
    let mut alpha_set = Selection::new(alpha);
    let mut room = cap - alpha_set.items().iter().map(|&i| sp.int_weights[i] as usize).sum::<usize>();
    for i in 0..n {
        let w = sp.int_weights[i] as usize;
        if !alpha_set.contains(i) && w <= room {
            alpha_set.insert(i);
            room -= w;
        }
    }
    Ok(DpResult { opt_value: sp.uncovered(&alpha_set), alpha_set })
}

/// Grows an insufficient set with the lightest remaining items until it
/// reaches `q`, then drops the last one. Ties go to the lowest index.
pub fn greedy_maximalize(inst: &Instance, s: &Selection) -> Result<Selection> {
    if !is_insufficient(inst, s) {
        return Err(invalid("input set is not insufficient"));
    }
    if (inst.total_weight() as f64) < inst.q {
        return Err(invalid("total weight is below q"));
    }
    let mut out = s.clone();
    let mut rest: Vec<usize> = (0..inst.n).filter(|&i| !s.contains(i)).collect();
    rest.sort_by_key(|&i| (inst.weights[i], i));
    let mut weight = s.weight(inst);
    for i in rest {
        weight += inst.weights[i];
        if weight as f64 >= inst.q {
            return Ok(out);
        }
        out.insert(i);
    }
    unreachable!("total weight reaches q")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationOutcome {
    pub cut: Option<MiscCut>,
    pub lp_value: f64,
    /// Absent when the LP check already certified that no cut exists.
    pub dp_value: Option<f64>,
}

/// LP check, then the exact DP, then maximalization of the DP set.
pub fn separation_procedure(inst: &Instance, sol: &LiftedSolution) -> Result<SeparationOutcome> {
    separate_diagonal(inst, &sol.diag)
}

pub fn separate_diagonal(inst: &Instance, diag: &[f64]) -> Result<SeparationOutcome> {
    let sp = SeparationProblem::new(inst, diag)?;
    let lp_value = separation_lp_check(&sp);
    if lp_value >= 1.0 {
        return Ok(SeparationOutcome { cut: None, lp_value, dp_value: None });
    }
    let dp = separation_dp(&sp)?;
    if dp.opt_value >= 1.0 - VIOLATION_TOL {
        return Ok(SeparationOutcome { cut: None, lp_value, dp_value: Some(dp.opt_value) });
    }
    let subset = greedy_maximalize(inst, &dp.alpha_set)?;
    let cut = MiscCut::new(inst, subset)?;
    debug_assert!(cut.lhs(&sp.diag_values) <= dp.opt_value + 1e-12);
    Ok(SeparationOutcome { cut: Some(cut), lp_value, dp_value: Some(dp.opt_value) })
}

#[derive(Debug, Clone, Serialize)]
pub struct MiscRound {
    pub cut: MiscCut,
    pub report: ConicReport,
}

#[derive(Debug, Clone)]
pub struct MiscRun {
    pub program: ConicProgram,
    pub solution: LiftedSolution,
    pub rounds: Vec<MiscRound>,
}

/// Separates and re-solves up to `rounds` times, stopping early when no cut
/// is found.
pub fn iterate_misc(
    inst: &Instance,
    prog: &ConicProgram,
    start: LiftedSolution,
    rounds: usize,
    opts: &ConicOptions,
) -> Result<MiscRun> {
    let mut program = prog.clone();
    let mut solution = start;
    let mut done = Vec::new();
    for _ in 0..rounds {
        let Some(cut) = separation_procedure(inst, &solution)?.cut else {
            break;
        };
        add_misc_cut(&mut program, &cut.subset);
        let (sol, report) = solve_conic(&program, opts)?;
        solution = sol;
        done.push(MiscRound { cut, report });
    }
    Ok(MiscRun { program, solution, rounds: done })
}
