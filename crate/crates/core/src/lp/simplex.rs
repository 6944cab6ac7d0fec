//! Dense bounded-variable dual simplex on a Tucker tableau.
//!
//! Each row `r` carries a logical variable `y_r = a_rᵀx` whose bounds encode
//! the row sense, so the initial basis is all-logical and no extra rows are
//! needed for variable bounds. The start is dual feasible by placing every
//! structural at the bound its cost points to.

use std::time::{Duration, Instant};

use crate::error::{invalid, Result};
use crate::lp::model::{LinearProgram, Sense, SolutionVector, SolveReport, SolveStatus};

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct LpOptions {
    pub max_iter: Option<usize>,
    pub deadline: Option<Instant>,
}

pub fn solve_lp(lp: &LinearProgram) -> Result<SolveReport> {
    solve_lp_with(lp, &LpOptions::default())
}

fn check(lp: &LinearProgram) -> Result<()> {
    let n = lp.num_vars();
    if lp.lower.len() != n || lp.upper.len() != n {
        return Err(invalid("bound vectors must match the objective length"));
    }
    if lp.objective.iter().any(|c| !c.is_finite()) {
        return Err(invalid("objective has non-finite entries"));
    }
    for (r, row) in lp.rows.iter().enumerate() {
        if !row.rhs.is_finite() {
            return Err(invalid(format!("row {r} has a non-finite right-hand side")));
        }
        for &(j, a) in &row.coefs {
            if j >= n || !a.is_finite() {
                return Err(invalid(format!("row {r} has a bad coefficient on variable {j}")));
            }
        }
    }
    for j in 0..n {
        if lp.lower[j].is_nan() || lp.upper[j].is_nan() {
            return Err(invalid(format!("variable {j} has a NaN bound")));
        }
    }
    Ok(())
}

fn report(status: SolveStatus, lp: &LinearProgram, x: Option<Vec<f64>>, iterations: usize, start: Instant) -> SolveReport {
    let wall_time: Duration = start.elapsed();
    match x {
        Some(values) => {
            let objective = lp.objective_value(&values);
            SolveReport {
                status,
                objective,
                bound: if status == SolveStatus::Optimal { objective } else { f64::NEG_INFINITY },
                solution: Some(SolutionVector { values, objective, source: "lp".to_string() }),
                nodes: 0,
                iterations,
                wall_time,
            }
        }
        None => SolveReport {
            status,
            objective: f64::NAN,
            bound: if status == SolveStatus::Infeasible { f64::INFINITY } else { f64::NEG_INFINITY },
            solution: None,
            nodes: 0,
            iterations,
            wall_time,
        },
    }
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &LpOptions) -> Result<SolveReport> {
    check(lp)?;
    let start = Instant::now();
    let n = lp.num_vars();
    let m = lp.rows.len();
    if (0..n).any(|j| lp.lower[j] > lp.upper[j]) {
        return Ok(report(SolveStatus::Infeasible, lp, None, 0, start));
    }
    if n == 0 {
        let ok = lp.rows.iter().all(|r| r.violation(&[]) <= FEAS_TOL);
        let status = if ok { SolveStatus::Optimal } else { SolveStatus::Infeasible };
        return Ok(report(status, lp, ok.then(Vec::new), 0, start));
    }

    let mut lo = lp.lower.clone();
    let mut hi = lp.upper.clone();
    let mut t = vec![0.0; m * n];
    for (r, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coefs {
            t[r * n + j] += a;
        }
        let (l, u) = match row.sense {
            Sense::Ge => (row.rhs, f64::INFINITY),
            Sense::Le => (f64::NEG_INFINITY, row.rhs),
            Sense::Eq => (row.rhs, row.rhs),
        };
        lo.push(l);
        hi.push(u);
    }

    let mut d = lp.objective.clone();
    let mut nonbasic: Vec<usize> = (0..n).collect();
    let mut at_upper = vec![false; n];
    let mut basic: Vec<usize> = (n..n + m).collect();
    for j in 0..n {
        if lo[j] == hi[j] {
            continue;
        }
        if d[j] >= 0.0 {
            if !lo[j].is_finite() {
                return Err(invalid(format!("variable {j} needs a finite lower bound")));
            }
        } else if hi[j].is_finite() {
            at_upper[j] = true;
        } else {
            return Err(invalid(format!("variable {j} needs a finite upper bound")));
        }
    }

    let max_iter = opts.max_iter.unwrap_or(100 * (n + m) + 1000);
    let mut vals = vec![0.0; n];
    let mut beta = vec![0.0; m];
    let mut iterations = 0;
    loop {
        for j in 0..n {
            let v = nonbasic[j];
            vals[j] = if at_upper[j] { hi[v] } else { lo[v] };
        }
        for r in 0..m {
            let row = &t[r * n..(r + 1) * n];
            beta[r] = row.iter().zip(&vals).map(|(a, v)| a * v).sum();
        }

        let mut leave = None;
        let mut worst = 0.0;
        for r in 0..m {
            let v = basic[r];
            let below = lo[v] - beta[r];
            let above = beta[r] - hi[v];
            let tol = FEAS_TOL * (1.0 + beta[r].abs());
            if below > tol && below > worst {
                worst = below;
                leave = Some((r, false));
            }
            if above > tol && above > worst {
                worst = above;
                leave = Some((r, true));
            }
        }
        let Some((r, to_upper)) = leave else {
            let mut x = vec![0.0; n];
            for j in 0..n {
                if nonbasic[j] < n {
                    x[nonbasic[j]] = vals[j];
                }
            }
            for r in 0..m {
                if basic[r] < n {
                    x[basic[r]] = beta[r].clamp(lo[basic[r]], hi[basic[r]]);
                }
            }
            return Ok(report(SolveStatus::Optimal, lp, Some(x), iterations, start));
        };

        if iterations >= max_iter {
            return Ok(report(SolveStatus::IterationLimit, lp, None, iterations, start));
        }
        if let Some(dl) = opts.deadline {
            if Instant::now() >= dl {
                return Ok(report(SolveStatus::TimeLimit, lp, None, iterations, start));
            }
        }
        iterations += 1;

        // Leaving below its lower bound means the basic value has to rise.
        let sign = if to_upper { -1.0 } else { 1.0 };
        let row = &t[r * n..(r + 1) * n];
        let mut enter: Option<(usize, f64, f64)> = None;
        for j in 0..n {
            let v = nonbasic[j];
            if lo[v] == hi[v] {
                continue;
            }
            let a = row[j] * sign;
            let eligible = (a > PIVOT_TOL && !at_upper[j]) || (a < -PIVOT_TOL && at_upper[j]);
            if !eligible {
                continue;
            }
            let ratio = d[j].abs() / a.abs();
            let better = match enter {
                None => true,
                Some((_, br, ba)) => ratio < br - 1e-12 || (ratio <= br + 1e-12 && a.abs() > ba),
            };
            if better {
                enter = Some((j, ratio, a.abs()));
            }
        }
        let Some((j, _, _)) = enter else {
            return Ok(report(SolveStatus::Infeasible, lp, None, iterations, start));
        };

        pivot(&mut t, &mut d, n, r, j);
        let leaving_var = basic[r];
        basic[r] = nonbasic[j];
        nonbasic[j] = leaving_var;
        at_upper[j] = to_upper;
    }
}

fn pivot(t: &mut [f64], d: &mut [f64], n: usize, r: usize, j: usize) {
    let p = t[r * n + j];
    {
        let row = &mut t[r * n..(r + 1) * n];
        for v in row.iter_mut() {
            *v = -*v / p;
        }
        row[j] = 1.0 / p;
    }
    let (head, rest) = t.split_at_mut(r * n);
    let (prow, tail) = rest.split_at_mut(n);
    let update = |other: &mut [f64]| {
        let f = other[j];
        if f != 0.0 {
            for (o, pr) in other.iter_mut().zip(prow.iter()) {
                *o += f * pr;
            }
            other[j] = f * prow[j];
        }
    };
    for other in head.chunks_mut(n) {
        update(other);
    }
    for other in tail.chunks_mut(n) {
        update(other);
    }
    update(d);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use crate::instgen::build_ce;
    use crate::lp::model::{build_mkpc, Row};

    #[test]
    fn ce_values() {
        let r = solve_lp(&build_mkpc(&build_ce(5).unwrap())).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 14.0 / 3.0).abs() < 1e-9, "{}", r.objective);
        // x = (5/6, 0, 5/6, 1) is optimal
        let r = solve_lp(&build_mkpc(&build_ce(2).unwrap())).unwrap();
        assert!((r.objective - 8.0 / 3.0).abs() < 1e-9, "{}", r.objective);
    }

    #[test]
    fn fractional_knapsack() {
        let inst = Instance::new(vec![1; 4], vec![1.0; 4], 3.5, 4);
        let r = solve_lp(&build_mkpc(&inst)).unwrap();
        assert!((r.objective - 3.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_rows() {
        let lp = LinearProgram {
            objective: vec![1.0, 1.0],
            rows: vec![Row { coefs: vec![(0, 1.0), (1, 1.0)], sense: Sense::Ge, rhs: 3.0 }],
            lower: vec![0.0; 2],
            upper: vec![1.0; 2],
        };
        assert_eq!(solve_lp(&lp).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn equality_and_negative_costs() {
        // max x + 2y s.t. x + y = 1.5, x, y in [0, 1]  -> y = 1, x = 0.5
        let lp = LinearProgram {
            objective: vec![-1.0, -2.0],
            rows: vec![Row { coefs: vec![(0, 1.0), (1, 1.0)], sense: Sense::Eq, rhs: 1.5 }],
            lower: vec![0.0; 2],
            upper: vec![1.0; 2],
        };
        let r = solve_lp(&lp).unwrap();
        let x = &r.solution.unwrap().values;
        assert!((x[0] - 0.5).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
