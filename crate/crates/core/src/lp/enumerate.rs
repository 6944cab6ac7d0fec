use std::time::Instant;

use crate::error::{invalid, Result};
use crate::instance::{check_selection, Instance, Selection};
use crate::lp::model::{SolutionVector, SolveReport, SolveStatus};

pub const MAX_ENUM_N: usize = 24;

/// Exact optimum by checking every subset. Ties keep the first subset in
/// increasing bitmask order.
pub fn enumerate_exact(inst: &Instance) -> Result<SolveReport> {
    let n = inst.n;
    if n > MAX_ENUM_N {
        return Err(invalid(format!("enumeration supports n <= {MAX_ENUM_N}, got {n}")));
    }
    let start = Instant::now();
    let mut best: Option<(f64, Selection)> = None;
    for mask in 0u64..(1u64 << n) {
        let weight: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| inst.weights[i]).sum();
        if (weight as f64) < inst.q {
            continue;
        }
        let sel = Selection::from_mask(mask, n);
        let cost = sel.cost(inst);
        if best.as_ref().is_some_and(|(b, _)| cost >= *b) {
            continue;
        }
        if check_selection(inst, &sel).feasible() {
            best = Some((cost, sel));
        }
    }
    let wall_time = start.elapsed();
    Ok(match best {
        Some((cost, sel)) => SolveReport {
            status: SolveStatus::Optimal,
            objective: cost,
            bound: cost,
            solution: Some(SolutionVector { values: sel.indicator(n), objective: cost, source: "enumerate".to_string() }),
            nodes: 0,
            iterations: 0,
            wall_time,
        },
        None => SolveReport {
            status: SolveStatus::Infeasible,
            objective: f64::NAN,
            bound: f64::INFINITY,
            solution: None,
            nodes: 0,
            iterations: 0,
            wall_time,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instgen::build_ce;

    #[test]
    fn ce_values() {
        assert_eq!(enumerate_exact(&build_ce(2).unwrap()).unwrap().objective, 3.0);
        let r = enumerate_exact(&build_ce(5).unwrap()).unwrap();
        assert_eq!(r.objective, 6.0);
        let sel: Vec<usize> = r.solution.unwrap().values.iter().enumerate().filter(|(_, v)| **v == 1.0).map(|(i, _)| i + 1).collect();
        assert_eq!(sel.len(), 6);
    }

    #[test]
    fn infeasible() {
        let inst = Instance::new(vec![1, 1], vec![1.0, 1.0], 3.0, 1);
        assert_eq!(enumerate_exact(&inst).unwrap().status, SolveStatus::Infeasible);
    }
}
