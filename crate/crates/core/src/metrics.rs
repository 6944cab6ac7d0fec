//! Solution-quality metrics, the rounding rule, the relative gap and two
//! empirical checkers: the rank-one-with-adjusted-diagonal lift and the
//! ordering of the three bounds.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::instance::{compactness_pairs, ensure_valid, Instance, Selection};
use crate::lp::{build_mkpc, solve_lp, solve_mip, MipLimits, SolveStatus};
use crate::sdp::{build_naive, solve_conic, ConicOptions};

/// Float tolerance of the lift checker.
pub const ROAD_TOL: f64 = 1e-9;

/// Selects item `i` iff `x_i >= 1/2`.
pub fn round_solution(x: &[f64]) -> Selection {
    Selection::new((0..x.len()).filter(|&i| x[i] >= 0.5))
}

/// `cᵀx / cᵀ1`.
pub fn imp(x: &[f64], inst: &Instance) -> Result<f64> {
    let total = inst.total_cost();
    if total == 0.0 {
        return Err(invalid("imp is undefined when all costs are zero"));
    }
    Ok(x.iter().zip(&inst.costs).map(|(a, c)| a * c).sum::<f64>() / total)
}

/// Largest run of unselected items between two selected ones, over `n`.
pub fn comp(sel: &Selection, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let gap = sel.items().windows(2).map(|w| w[1] - w[0] - 1).max().unwrap_or(0);
    gap as f64 / n as f64
}

/// `(2/√n)·‖x − ⌊x + ½⌋‖₂`: 0 on binary points, 1 only at `x = ½·1`.
pub fn frac(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let ss: f64 = x.iter().map(|v| (v - (v + 0.5).floor()).powi(2)).sum();
    (2.0 * ss.sqrt() / (x.len() as f64).sqrt()).min(1.0)
}

/// `frac(x)²` in exact arithmetic.
pub fn frac_squared_exact(x: &[BigRational]) -> BigRational {
    if x.is_empty() {
        return BigRational::zero();
    }
    let half = BigRational::new(1.into(), 2.into());
    let ss = x.iter().fold(BigRational::zero(), |acc, v| {
        let d = v - (v + &half).floor();
        acc + &d * &d
    });
    ss * BigRational::from_integer(4.into()) / BigRational::from_integer(BigInt::from(x.len()))
}

/// `100·(ub − lb)/ub`.
pub fn gap(ub: f64, lb: f64) -> Result<f64> {
    if !(ub > 0.0) {
        return Err(invalid(format!("gap needs ub > 0, got {ub}")));
    }
    Ok(100.0 * (ub - lb) / ub)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub imp: f64,
    /// Computed on the rounded selection.
    pub comp: f64,
    pub frac: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap_percent: Option<f64>,
    pub rounded: Selection,
}

impl MetricReport {
    /// `ub` is the best known integer objective; the gap uses `cᵀx` as the
    /// lower bound.
    pub fn compute(inst: &Instance, x: &[f64], ub: Option<f64>) -> Result<Self> {
        if x.len() != inst.n {
            return Err(invalid(format!("solution has {} entries, expected {}", x.len(), inst.n)));
        }
        let rounded = round_solution(x);
        let lb: f64 = x.iter().zip(&inst.costs).map(|(a, c)| a * c).sum();
        Ok(MetricReport {
            imp: imp(x, inst)?,
            comp: comp(&rounded, inst.n),
            frac: frac(x),
            gap_percent: ub.map(|u| gap(u, lb)).transpose()?,
            rounded,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadViolationKind {
    /// `wᵀx < q`.
    Knapsack,
    /// `κ·x_i·x_j > Σ_{i<k<j} x_k`.
    Compactness,
    /// `x_i` outside `[0, 1]`.
    Box,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoadViolation<T> {
    pub kind: RoadViolationKind,
    #[serde(serialize_with = "one_based")]
    pub i: usize,
    #[serde(serialize_with = "one_based")]
    pub j: usize,
    pub lhs: T,
    pub rhs: T,
}

fn one_based<S: Serializer>(i: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*i as u64 + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoadReport<T> {
    pub holds: bool,
    pub violations: Vec<RoadViolation<T>>,
}

/// Checks the lift `X = xxᵀ + Diag(x − x²)` against the naive relaxation.
/// `Y` is PSD for any `x` in the box, so only box membership stands in for it.
pub fn road_check(inst: &Instance, x: &[f64]) -> Result<RoadReport<f64>> {
    check_len(inst, x.len())?;
    let mut v = Vec::new();
    for (i, &xi) in x.iter().enumerate() {
        if xi < -ROAD_TOL {
            v.push(RoadViolation { kind: RoadViolationKind::Box, i, j: i, lhs: xi, rhs: 0.0 });
        } else if xi > 1.0 + ROAD_TOL {
            v.push(RoadViolation { kind: RoadViolationKind::Box, i, j: i, lhs: xi, rhs: 1.0 });
        }
    }
    let wx: f64 = x.iter().zip(&inst.weights).map(|(a, &w)| a * w as f64).sum();
    if wx < inst.q - ROAD_TOL * inst.q.max(1.0) {
        v.push(RoadViolation { kind: RoadViolationKind::Knapsack, i: 0, j: inst.n - 1, lhs: wx, rhs: inst.q });
    }
    for p in compactness_pairs(inst.n, inst.delta) {
        let lhs = p.kappa as f64 * x[p.i] * x[p.j];
        let rhs: f64 = x[p.i + 1..p.j].iter().sum();
        if lhs > rhs + ROAD_TOL {
            v.push(RoadViolation { kind: RoadViolationKind::Compactness, i: p.i, j: p.j, lhs, rhs });
        }
    }
    Ok(RoadReport { holds: v.is_empty(), violations: v })
}

/// Exact counterpart of [`road_check`] with no tolerance.
pub fn road_check_exact(inst: &Instance, x: &[BigRational]) -> Result<RoadReport<BigRational>> {
    check_len(inst, x.len())?;
    let zero = BigRational::zero();
    let one = BigRational::one();
    let mut v = Vec::new();
    for (i, xi) in x.iter().enumerate() {
        if xi < &zero {
            v.push(RoadViolation { kind: RoadViolationKind::Box, i, j: i, lhs: xi.clone(), rhs: zero.clone() });
        } else if xi > &one {
            v.push(RoadViolation { kind: RoadViolationKind::Box, i, j: i, lhs: xi.clone(), rhs: one.clone() });
        }
    }
    let q = exact(inst.q)?;
    let wx = x.iter().zip(&inst.weights).fold(zero.clone(), |acc, (a, &w)| acc + a * BigRational::from_integer(w.into()));
    if wx < q {
        v.push(RoadViolation { kind: RoadViolationKind::Knapsack, i: 0, j: inst.n - 1, lhs: wx, rhs: q });
    }
    for p in compactness_pairs(inst.n, inst.delta) {
        let lhs = BigRational::from_integer(p.kappa.into()) * &x[p.i] * &x[p.j];
        let rhs = x[p.i + 1..p.j].iter().fold(zero.clone(), |acc, a| acc + a);
        if lhs > rhs {
            v.push(RoadViolation { kind: RoadViolationKind::Compactness, i: p.i, j: p.j, lhs, rhs });
        }
    }
    Ok(RoadReport { holds: v.is_empty(), violations: v })
}

fn check_len(inst: &Instance, len: usize) -> Result<()> {
    if len != inst.n {
        return Err(invalid(format!("solution has {len} entries, expected {}", inst.n)));
    }
    if inst.n == 0 {
        return Err(invalid("empty instance"));
    }
    Ok(())
}

/// The exact binary value of a finite float.
pub fn exact(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| invalid(format!("{v} is not finite")))
}

/// Parses `"a/b"`, an integer, or a decimal float into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| invalid(format!("bad numerator in {s:?}")))?;
        let b: BigInt = b.trim().parse().map_err(|_| invalid(format!("bad denominator in {s:?}")))?;
        if b.is_zero() {
            return Err(invalid(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(a, b));
    }
    if let Ok(i) = s.parse::<BigInt>() {
        return Ok(BigRational::from_integer(i));
    }
    exact(s.parse::<f64>().map_err(|_| invalid(format!("not a number: {s:?}")))?)
}

/// `a/b` for display and JSON.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(if r.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundOrder {
    pub sdp_lb: f64,
    pub lp_lb: f64,
    pub mip_obj: f64,
    pub ordering_holds: bool,
}

/// Solves the naive relaxation, the LP relaxation and the integer program and
/// reports whether `sdp <= lp <= mip` holds up to `tol`.
pub fn bound_order_check(inst: &Instance, tol: f64) -> Result<BoundOrder> {
    ensure_valid(inst)?;
    let (_, sdp) = solve_conic(&build_naive(inst), &ConicOptions::default())?;
    if !sdp.meets_contract() {
        return Err(Error::SolverFailure(format!("semidefinite relaxation ended with status {:?}", sdp.status)));
    }
    let model = build_mkpc(inst);
    let lp = solve_lp(&model)?;
    let mip = solve_mip(&model, &MipLimits::default())?;
    for (name, r) in [("LP relaxation", &lp), ("integer program", &mip)] {
        if r.status != SolveStatus::Optimal {
            return Err(Error::SolverFailure(format!("{name} ended with status {:?}", r.status)));
        }
    }
    let ordering_holds = sdp.objective <= lp.objective + tol && lp.objective + tol <= mip.objective + 2.0 * tol;
    Ok(BoundOrder { sdp_lb: sdp.objective, lp_lb: lp.objective, mip_obj: mip.objective, ordering_holds })
}
