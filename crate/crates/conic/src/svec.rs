//! Scaled vectorization of symmetric matrices.
//!
//! `svec` stacks the upper triangle column by column and multiplies every
//! off-diagonal entry by √2:
//!
//! ```text
//! svec(X) = (X11, √2 X12, X22, √2 X13, √2 X23, X33, ...)
//! ```
//!
//! With this scaling `svec(A) · svec(B) = trace(A B)`, so inner products on
//! the PSD cone are plain dot products. Every coefficient that enters a conic
//! model goes through this module.

use nalgebra::DMatrix;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Length of `svec` for a matrix of order `k`.
#[inline]
pub fn svec_len(k: usize) -> usize {
    k * (k + 1) / 2
}

/// Position of entry `(i, j)` (either order) in `svec`.
#[inline]
pub fn svec_index(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    hi * (hi + 1) / 2 + lo
}

/// Inverse of [`svec_index`]: `(i, j)` with `i <= j` for each position.
pub fn svec_coords(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(svec_len(k));
    for j in 0..k {
        for i in 0..=j {
            out.push((i, j));
        }
    }
    out
}

/// Scale applied to entry `(i, j)` when it is stored in `svec`.
#[inline]
pub fn entry_scale(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        SQRT2
    }
}

/// Coefficient on the `svec` coordinate of `(i, j)` that reproduces the
/// linear functional `coef * X_ij` (one copy of the entry, not `X_ij + X_ji`).
#[inline]
pub fn encode_entry_coef(i: usize, j: usize, coef: f64) -> f64 {
    coef / entry_scale(i, j)
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let k = m.nrows();
    let mut v = Vec::with_capacity(svec_len(k));
    for j in 0..k {
        for i in 0..=j {
            if i == j {
                v.push(m[(i, i)]);
            } else {
                v.push(SQRT2 * 0.5 * (m[(i, j)] + m[(j, i)]));
            }
        }
    }
    v
}

pub fn smat(v: &[f64], k: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_len(k));
    let mut m = DMatrix::zeros(k, k);
    let mut p = 0;
    for j in 0..k {
        for i in 0..=j {
            if i == j {
                m[(i, i)] = v[p];
            } else {
                let x = v[p] / SQRT2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            p += 1;
        }
    }
    m
}
