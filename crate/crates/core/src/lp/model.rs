use std::time::Duration;

use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::instance::{compactness_pairs, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// `min objectiveᵀx` over rows and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Checks `x` against every row and bound in exact arithmetic. Returns the
    /// indices of violated rows (bounds are reported as row index
    /// `rows.len() + j`).
    pub fn violated_exact(&self, x: &[BigRational]) -> Vec<usize> {
        let conv = |v: f64| BigRational::from_f64(v).expect("finite coefficient");
        let mut out = Vec::new();
        for (r, row) in self.rows.iter().enumerate() {
            let mut act = BigRational::zero();
            for &(j, a) in &row.coefs {
                act += conv(a) * &x[j];
            }
            let rhs = conv(row.rhs);
            let ok = match row.sense {
                Sense::Ge => act >= rhs,
                Sense::Le => act <= rhs,
                Sense::Eq => act == rhs,
            };
            if !ok {
                out.push(r);
            }
        }
        for (j, v) in x.iter().enumerate() {
            if *v < conv(self.lower[j]) || *v > conv(self.upper[j]) {
                out.push(self.rows.len() + j);
            }
        }
        out
    }

    pub fn objective_exact(&self, x: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (c, v) in self.objective.iter().zip(x) {
            acc += BigRational::from_f64(*c).expect("finite cost") * v;
        }
        acc
    }
}

/// Binary model: knapsack row plus one linear compactness row per far pair,
/// `kappa x_i + kappa x_j - sum_{i<k<j} x_k <= kappa`.
pub fn build_mkpc(inst: &Instance) -> LinearProgram {
    let n = inst.n;
    let mut rows = Vec::new();
    rows.push(Row {
        coefs: inst.weights.iter().enumerate().map(|(i, &w)| (i, w as f64)).collect(),
        sense: Sense::Ge,
        rhs: inst.q,
    });
    for p in compactness_pairs(n, inst.delta) {
        let k = p.kappa as f64;
        let mut coefs = vec![(p.i, k)];
        coefs.extend((p.i + 1..p.j).map(|m| (m, -1.0)));
        coefs.push((p.j, k));
        rows.push(Row { coefs, sense: Sense::Le, rhs: k });
    }
    LinearProgram { objective: inst.costs.clone(), rows, lower: vec![0.0; n], upper: vec![1.0; n] }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    TimeLimit,
}

/// A point with its objective and the model that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionVector {
    pub values: Vec<f64>,
    pub objective: f64,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Objective of the returned solution (`NaN` when there is none).
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    pub solution: Option<SolutionVector>,
    pub nodes: usize,
    pub iterations: usize,
    pub wall_time: Duration,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instgen::build_ce;

    #[test]
    fn row_counts() {
        let lp = build_mkpc(&build_ce(2).unwrap());
        assert_eq!(lp.rows.len(), 2);
        assert_eq!(lp.rows[1].coefs, vec![(0, 1.0), (1, -1.0), (2, -1.0), (3, 1.0)]);
        assert_eq!(build_mkpc(&build_ce(5).unwrap()).rows.len(), 29);
        let inst = Instance::new(vec![1; 3], vec![1.0; 3], 1.0, 4);
        assert_eq!(build_mkpc(&inst).rows.len(), 1);
    }
}
