//! Conic models over the lifted matrix `X`.
//!
//! Decision variables are `svec(X)` for the symmetric `n × n` matrix `X`:
//! the column-wise upper triangle with off-diagonal entries scaled by `√2`.
//! Rows and objectives are written in terms of matrix entries `X_ij` and
//! pass through [`encode_entry_coef`] exactly once. The bordered matrix
//! `Y = [[1, diag(X)ᵀ], [diag(X), X]]` is constrained to be PSD.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use compactknap_conic::svec::{encode_entry_coef, entry_scale, svec_index, svec_len};
use compactknap_conic::SparseVec;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::instance::{compactness_pairs, Instance, Selection};
use crate::lp::Sense;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Naive,
    Penalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    T1,
    T2,
    T3,
    T4,
}

impl Tier {
    pub const ALL: [Tier; 4] = [Tier::T1, Tier::T2, Tier::T3, Tier::T4];

    /// Parses a comma-separated list such as `T1,T3`.
    pub fn parse_list(s: &str) -> Result<Vec<Tier>> {
        let mut out: Vec<Tier> = s.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.parse()).collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl FromStr for Tier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "T1" => Ok(Tier::T1),
            "T2" => Ok(Tier::T2),
            "T3" => Ok(Tier::T3),
            "T4" => Ok(Tier::T4),
            other => Err(invalid(format!("unknown strengthening tier {other:?}"))),
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Which triples `i < k < j` receive the three-index inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TripleWindow {
    /// `j - i <= 3 delta`.
    #[default]
    Default,
    /// `j - i <= span`.
    Span(usize),
    Full,
}

impl TripleWindow {
    pub fn max_span(&self, delta: usize, n: usize) -> usize {
        match self {
            TripleWindow::Default => 3 * delta,
            TripleWindow::Span(s) => *s,
            TripleWindow::Full => n,
        }
    }
}

impl FromStr for TripleWindow {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(TripleWindow::Full),
            "default" => Ok(TripleWindow::Default),
            v => v.parse().map(TripleWindow::Span).map_err(|_| invalid(format!("triple window must be an integer or \"full\", got {v:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    Knapsack,
    Compactness,
    T1,
    T2,
    T3,
    T4,
    Misc,
}

/// Linear row over matrix entries, stored encoded in `svec` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicRow {
    pub coefs: SparseVec,
    pub sense: Sense,
    pub rhs: f64,
    pub kind: RowKind,
}

impl ConicRow {
    pub fn activity(&self, v: &[f64]) -> f64 {
        self.coefs.dot(v)
    }

    pub fn violation(&self, v: &[f64]) -> f64 {
        let a = self.activity(v);
        match self.sense {
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// Accumulates coefficients on upper-triangle entries `(min, max)`.
#[derive(Debug, Default)]
pub struct EntryRow {
    entries: BTreeMap<(usize, usize), f64>,
}

impl EntryRow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, i: usize, j: usize, coef: f64) -> &mut Self {
        let key = (i.min(j), i.max(j));
        *self.entries.entry(key).or_insert(0.0) += coef;
        self
    }

    pub fn encode(&self) -> SparseVec {
        let mut v = SparseVec::new();
        let mut items: Vec<(usize, f64)> = self
            .entries
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(&(i, j), &c)| (svec_index(i, j), encode_entry_coef(i, j, c)))
            .collect();
        items.sort_by_key(|&(k, _)| k);
        for (k, c) in items {
            v.push(k, c);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub n: usize,
    pub kind: ModelKind,
    pub lambda: f64,
    /// Objective over `svec(X)`.
    pub objective: Vec<f64>,
    pub rows: Vec<ConicRow>,
    pub tiers: Vec<Tier>,
    pub cuts: Vec<Selection>,
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        svec_len(self.n)
    }

    /// Objective coefficient on the matrix entry `X_ij` (counted once).
    pub fn objective_entry(&self, i: usize, j: usize) -> f64 {
        self.objective[svec_index(i, j)] * entry_scale(i, j)
    }

    pub fn push_row(&mut self, row: &EntryRow, sense: Sense, rhs: f64, kind: RowKind) {
        self.rows.push(ConicRow { coefs: row.encode(), sense, rhs, kind });
    }

    pub fn count_rows(&self, kind: RowKind) -> usize {
        self.rows.iter().filter(|r| r.kind == kind).count()
    }

    /// Largest linear-row violation at `svec(X) = v`.
    pub fn max_row_violation(&self, v: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.violation(v)).fold(0.0, f64::max)
    }

    pub fn objective_value(&self, v: &[f64]) -> f64 {
        self.objective.iter().zip(v).map(|(c, x)| c * x).sum()
    }
}

fn objective_from(n: usize, entries: &EntryRow) -> Vec<f64> {
    let mut obj = vec![0.0; svec_len(n)];
    let enc = entries.encode();
    for (k, c) in enc.iter() {
        obj[k] = c;
    }
    obj
}

fn knapsack_row(inst: &Instance) -> EntryRow {
    let mut r = EntryRow::new();
    for (i, &w) in inst.weights.iter().enumerate() {
        r.add(i, i, w as f64);
    }
    r
}

fn empty(inst: &Instance, kind: ModelKind, lambda: f64, objective: Vec<f64>) -> ConicProgram {
    ConicProgram { n: inst.n, kind, lambda, objective, rows: Vec::new(), tiers: Vec::new(), cuts: Vec::new() }
}

/// Rank-one constraint dropped: knapsack on the diagonal and
/// `kappa X_ij <= sum_{i<k<j} X_kk` for every far pair.
pub fn build_naive(inst: &Instance) -> ConicProgram {
    let mut obj = EntryRow::new();
    for (i, &c) in inst.costs.iter().enumerate() {
        obj.add(i, i, c);
    }
    let mut prog = empty(inst, ModelKind::Naive, 0.0, objective_from(inst.n, &obj));
    prog.push_row(&knapsack_row(inst), Sense::Ge, inst.q, RowKind::Knapsack);
    for p in compactness_pairs(inst.n, inst.delta) {
        let mut r = EntryRow::new();
        r.add(p.i, p.j, p.kappa as f64);
        for k in p.i + 1..p.j {
            r.add(k, k, -1.0);
        }
        prog.push_row(&r, Sense::Le, 0.0, RowKind::Compactness);
    }
    prog
}

/// Compactness moved into the objective with weight `lambda`; only the
/// knapsack row remains.
pub fn build_penalized(inst: &Instance, lambda: f64) -> Result<ConicProgram> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(invalid(format!("penalty weight must be finite and >= 0, got {lambda}")));
    }
    let mut obj = EntryRow::new();
    for (i, &c) in inst.costs.iter().enumerate() {
        obj.add(i, i, c);
    }
    if lambda > 0.0 {
        for p in compactness_pairs(inst.n, inst.delta) {
            obj.add(p.i, p.j, lambda * p.kappa as f64);
            for k in p.i + 1..p.j {
                obj.add(k, k, -lambda);
            }
        }
    }
    let mut prog = empty(inst, ModelKind::Penalized, lambda, objective_from(inst.n, &obj));
    prog.push_row(&knapsack_row(inst), Sense::Ge, inst.q, RowKind::Knapsack);
    Ok(prog)
}

pub fn add_strengthening(prog: &ConicProgram, inst: &Instance, tiers: &[Tier], window: TripleWindow) -> Result<ConicProgram> {
    if prog.n != inst.n {
        return Err(invalid("program and instance sizes differ"));
    }
    let n = inst.n;
    let mut out = prog.clone();
    let mut tiers = tiers.to_vec();
    tiers.sort();
    tiers.dedup();
    for &tier in &tiers {
        if out.tiers.contains(&tier) {
            continue;
        }
        match tier {
            Tier::T1 => {
                for i in 0..n {
                    for j in i + 1..n {
                        let mut r = EntryRow::new();
                        r.add(i, j, 1.0);
                        out.push_row(&r, Sense::Ge, 0.0, RowKind::T1);
                        let mut r = EntryRow::new();
                        r.add(i, i, 1.0).add(i, j, -1.0);
                        out.push_row(&r, Sense::Ge, 0.0, RowKind::T1);
                        let mut r = EntryRow::new();
                        r.add(j, j, 1.0).add(i, j, -1.0);
                        out.push_row(&r, Sense::Ge, 0.0, RowKind::T1);
                        let mut r = EntryRow::new();
                        r.add(i, j, 1.0).add(i, i, -1.0).add(j, j, -1.0);
                        out.push_row(&r, Sense::Ge, -1.0, RowKind::T1);
                    }
                }
            }
            Tier::T2 => {
                let span = window.max_span(inst.delta, n);
                for i in 0..n {
                    for j in i + 2..n.min(i + span + 1) {
                        for k in i + 1..j {
                            let mut r = EntryRow::new();
                            r.add(k, k, 1.0).add(i, j, 1.0).add(i, k, -1.0).add(k, j, -1.0);
                            out.push_row(&r, Sense::Ge, 0.0, RowKind::T2);
                            let mut r = EntryRow::new();
                            r.add(i, k, 1.0).add(k, j, 1.0).add(i, j, 1.0);
                            r.add(i, i, -1.0).add(j, j, -1.0).add(k, k, -1.0);
                            out.push_row(&r, Sense::Ge, -1.0, RowKind::T2);
                        }
                    }
                }
            }
            Tier::T3 => {
                for j in 0..n {
                    let mut r = EntryRow::new();
                    for (i, &w) in inst.weights.iter().enumerate() {
                        r.add(i, j, w as f64);
                    }
                    r.add(j, j, -inst.q);
                    out.push_row(&r, Sense::Ge, 0.0, RowKind::T3);
                    let mut r = EntryRow::new();
                    r.add(j, j, inst.q);
                    for (i, &w) in inst.weights.iter().enumerate() {
                        r.add(i, i, w as f64);
                        r.add(i, j, -(w as f64));
                    }
                    out.push_row(&r, Sense::Ge, inst.q, RowKind::T3);
                }
            }
            Tier::T4 => {
                let w: Vec<f64> = inst.weights.iter().map(|&w| w as f64).collect();
                let total: f64 = w.iter().map(|v| v * v).sum();
                let mut r = EntryRow::new();
                for i in 0..n {
                    r.add(i, i, total - w[i] * w[i]);
                    for j in i + 1..n {
                        r.add(i, j, 2.0 * (total - w[i] * w[j]));
                    }
                }
                out.push_row(&r, Sense::Ge, 0.0, RowKind::T4);
            }
        }
        out.tiers.push(tier);
    }
    out.tiers.sort();
    Ok(out)
}

/// Adds `sum_{i not in S} X_ii >= 1`.
pub fn add_misc_cut(prog: &mut ConicProgram, subset: &Selection) {
    let mut r = EntryRow::new();
    for i in (0..prog.n).filter(|&i| !subset.contains(i)) {
        r.add(i, i, 1.0);
    }
    prog.push_row(&r, Sense::Ge, 1.0, RowKind::Misc);
    prog.cuts.push(subset.clone());
}
