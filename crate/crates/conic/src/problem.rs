use crate::svec::svec_len;
use crate::ConicError;

/// Sparse vector as parallel index/value arrays.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVec {
    pub idx: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, i: usize, v: f64) {
        self.idx.push(i);
        self.val.push(v);
    }

    pub fn nnz(&self) -> usize {
        self.idx.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.idx.iter().zip(&self.val).map(|(&i, v)| v * x[i]).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.idx.iter().copied().zip(self.val.iter().copied())
    }

    pub fn max_abs(&self) -> f64 {
        self.val.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// A cone program in the standard form
///
/// ```text
/// minimize    cᵀx
/// subject to  G x + s = h,   s ∈ R₊ˡ × S₊ᵏ
/// ```
///
/// `G` is split by cone: `lp_rows` are the rows facing the nonnegative
/// orthant, `psd_cols` are the columns of the block facing the PSD cone,
/// expressed in `svec` coordinates of an order-`psd_order` matrix.
#[derive(Debug, Clone, Default)]
pub struct ConeProblem {
    pub c: Vec<f64>,
    pub lp_rows: Vec<SparseVec>,
    pub h_lp: Vec<f64>,
    pub psd_order: usize,
    pub psd_cols: Vec<SparseVec>,
    pub h_psd: Vec<f64>,
}

impl ConeProblem {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_lp_rows(&self) -> usize {
        self.lp_rows.len()
    }

    /// Barrier degree of the cone: `l + k`.
    pub fn degree(&self) -> usize {
        self.lp_rows.len() + self.psd_order
    }

    pub fn validate(&self) -> Result<(), ConicError> {
        let n = self.c.len();
        if n == 0 {
            return Err(ConicError::Dimension("no variables".into()));
        }
        if self.h_lp.len() != self.lp_rows.len() {
            return Err(ConicError::Dimension(format!(
                "h_lp has {} entries for {} rows",
                self.h_lp.len(),
                self.lp_rows.len()
            )));
        }
        let m = svec_len(self.psd_order);
        if self.psd_order > 0 {
            if self.psd_cols.len() != n {
                return Err(ConicError::Dimension(format!(
                    "psd block has {} columns for {} variables",
                    self.psd_cols.len(),
                    n
                )));
            }
            if self.h_psd.len() != m {
                return Err(ConicError::Dimension(format!(
                    "h_psd has {} entries, expected {}",
                    self.h_psd.len(),
                    m
                )));
            }
        }
        for (r, row) in self.lp_rows.iter().enumerate() {
            if row.idx.len() != row.val.len() || row.idx.iter().any(|&j| j >= n) {
                return Err(ConicError::Dimension(format!("row {r} references a missing variable")));
            }
        }
        if self.psd_order > 0 {
            for (j, col) in self.psd_cols.iter().enumerate() {
                if col.idx.len() != col.val.len() || col.idx.iter().any(|&a| a >= m) {
                    return Err(ConicError::Dimension(format!("column {j} leaves the psd block")));
                }
            }
        }
        let finite = self.c.iter().chain(&self.h_lp).chain(&self.h_psd).all(|v| v.is_finite())
            && self.lp_rows.iter().all(|r| r.val.iter().all(|v| v.is_finite()))
            && self.psd_cols.iter().all(|r| r.val.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(ConicError::NonFinite);
        }
        Ok(())
    }
}
