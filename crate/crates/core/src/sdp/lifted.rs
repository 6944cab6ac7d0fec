use compactknap_conic::svec::{smat, svec};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{invalid, Result};

/// Symmetric `X`, its diagonal, and the bordered matrix
/// `Y = [[1, diag(X)ᵀ], [diag(X), X]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSolution {
    pub x: DMatrix<f64>,
    pub diag: Vec<f64>,
    pub y: DMatrix<f64>,
}

impl LiftedSolution {
    pub fn from_matrix(x: DMatrix<f64>) -> Self {
        let x = (&x + x.transpose()) * 0.5;
        let n = x.nrows();
        let diag: Vec<f64> = (0..n).map(|i| x[(i, i)]).collect();
        let mut y = DMatrix::zeros(n + 1, n + 1);
        y[(0, 0)] = 1.0;
        for i in 0..n {
            y[(0, i + 1)] = diag[i];
            y[(i + 1, 0)] = diag[i];
            for j in 0..n {
                y[(i + 1, j + 1)] = x[(i, j)];
            }
        }
        LiftedSolution { x, diag, y }
    }

    pub fn from_svec(v: &[f64], n: usize) -> Self {
        Self::from_matrix(smat(v, n))
    }

    /// `X = x xᵀ`.
    pub fn lift(x: &[f64]) -> Self {
        let v = nalgebra::DVector::from_column_slice(x);
        Self::from_matrix(&v * v.transpose())
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn svec(&self) -> Vec<f64> {
        svec(&self.x)
    }

    /// Eigenvalues of `Y`, ascending.
    pub fn y_eigenvalues(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.y.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn eigen_summary(&self) -> EigenSummary {
        let e = self.y_eigenvalues();
        let k = e.len();
        EigenSummary {
            min: e[0],
            max: e[k - 1],
            second: if k > 1 { e[k - 2] } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenSummary {
    pub min: f64,
    pub max: f64,
    pub second: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntegralityVerdict {
    pub is_binary: bool,
    pub rank_y_one: bool,
}

impl IntegralityVerdict {
    /// Binary and rank one together certify an exact optimum read off the
    /// diagonal.
    pub fn certifies_optimum(&self) -> bool {
        self.is_binary && self.rank_y_one
    }
}

/// Reports binarity of every entry of `X` and whether `Y` is numerically
/// rank one. The two are computed independently.
pub fn verify_lifted_integrality(sol: &LiftedSolution, tol: f64) -> Result<IntegralityVerdict> {
    let s = sol.eigen_summary();
    if s.min < -tol * s.max.abs().max(1.0) {
        return Err(invalid(format!("Y is not PSD: smallest eigenvalue {:.3e}", s.min)));
    }
    let is_binary = sol.x.iter().all(|v| v.abs() <= tol || (v - 1.0).abs() <= tol);
    let rank_y_one = s.second <= tol * s.max;
    Ok(IntegralityVerdict { is_binary, rank_y_one })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_lift_is_certified() {
        let v = verify_lifted_integrality(&LiftedSolution::lift(&[1.0, 0.0, 1.0]), 1e-9).unwrap();
        assert!(v.is_binary && v.rank_y_one);
    }

    #[test]
    fn half_matrix_is_neither() {
        let sol = LiftedSolution::from_matrix(DMatrix::from_element(2, 2, 0.5));
        let v = verify_lifted_integrality(&sol, 1e-9).unwrap();
        assert_eq!(v, IntegralityVerdict { is_binary: false, rank_y_one: false });
    }

    #[test]
    fn zero_matrix_is_degenerate_rank_one() {
        let v = verify_lifted_integrality(&LiftedSolution::from_matrix(DMatrix::zeros(3, 3)), 1e-9).unwrap();
        assert!(v.is_binary && v.rank_y_one);
    }

    #[test]
    fn rejects_indefinite() {
        let sol = LiftedSolution::from_matrix(DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 0.5]));
        assert!(verify_lifted_integrality(&sol, 1e-9).is_err());
    }
}
