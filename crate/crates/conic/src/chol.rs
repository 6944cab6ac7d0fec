//! Dense Cholesky factorization for the normal equations.
//!
//! Recursive algorithm on a row-major buffer. Only the lower triangle is
//! read; the off-diagonal solves and trailing updates go through
//! `matrixmultiply`.

const LEAF: usize = 32;
const SYRK_BLOCK: usize = 192;

#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors the symmetric matrix stored row-major in `a` (lower triangle
    /// used). On failure returns the pivot index that was not positive.
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self, usize> {
        assert_eq!(a.len(), n * n);
        factor_in_place(&mut a, n)?;
        Ok(Cholesky { n, l: a })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let l = &self.l;
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
            b[i] = (b[i] - s) / l[i * n + i];
        }
        for i in (0..n).rev() {
            let xi = b[i] / l[i * n + i];
            b[i] = xi;
            let row = &l[i * n..i * n + i];
            for (bp, lp) in b[..i].iter_mut().zip(row) {
                *bp -= lp * xi;
            }
        }
    }
}

fn factor_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
    chol_rec(a, n, 0, n)
}

/// Factors the `m x m` diagonal block at `(off, off)`.
fn chol_rec(a: &mut [f64], ld: usize, off: usize, m: usize) -> Result<(), usize> {
    if m <= LEAF {
        return chol_leaf(a, ld, off, m);
    }
    let m1 = (m / 2).next_multiple_of(8).min(m - 1);
    chol_rec(a, ld, off, m1)?;
    trsm(a, ld, off + m1, m - m1, off, m1);
    syrk_lower(a, ld, off + m1, m - m1, off, m1);
    chol_rec(a, ld, off + m1, m - m1)
}

fn chol_leaf(a: &mut [f64], ld: usize, off: usize, m: usize) -> Result<(), usize> {
    for j in off..off + m {
        let mut d = a[j * ld + j];
        for p in off..j {
            d -= a[j * ld + p] * a[j * ld + p];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let d = d.sqrt();
        a[j * ld + j] = d;
        for i in j + 1..off + m {
            let mut s = a[i * ld + j];
            for p in off..j {
                s -= a[i * ld + p] * a[j * ld + p];
            }
            a[i * ld + j] = s / d;
        }
    }
    Ok(())
}

/// Overwrites `B = a[r0.., c0..c0+nc]` with `X` where `X Lᵀ = B` and `L` is the
/// factored diagonal block at `(c0, c0)`. Requires `r0 >= c0 + nc`.
fn trsm(a: &mut [f64], ld: usize, r0: usize, nr: usize, c0: usize, nc: usize) {
    if nc <= LEAF {
        for i in r0..r0 + nr {
            for j in c0..c0 + nc {
                let mut s = a[i * ld + j];
                for p in c0..j {
                    s -= a[i * ld + p] * a[j * ld + p];
                }
                a[i * ld + j] = s / a[j * ld + j];
            }
        }
        return;
    }
    let n1 = nc / 2;
    trsm(a, ld, r0, nr, c0, n1);
    // B2 -= X1 * L21ᵀ; the three regions are disjoint.
    unsafe {
        let base = a.as_mut_ptr();
        let lhs = base.add(r0 * ld + c0) as *const f64;
        let rhs = base.add((c0 + n1) * ld + c0) as *const f64;
        let dst = base.add(r0 * ld + c0 + n1);
        matrixmultiply::dgemm(nr, n1, nc - n1, -1.0, lhs, ld as isize, 1, rhs, 1, ld as isize, 1.0, dst, ld as isize, 1);
    }
    trsm(a, ld, r0, nr, c0 + n1, nc - n1);
}

/// Lower part of `C -= P Pᵀ` where `C` is the `m x m` block at `(s0, s0)` and
/// `P = a[s0.., c0..c0+k]` with `c0 + k <= s0`.
fn syrk_lower(a: &mut [f64], ld: usize, s0: usize, m: usize, c0: usize, k: usize) {
    let mut bj = s0;
    while bj < s0 + m {
        let w = SYRK_BLOCK.min(s0 + m - bj);
        let rows = s0 + m - bj;
        unsafe {
            let base = a.as_mut_ptr();
            let lhs = base.add(bj * ld + c0) as *const f64;
            let rhs = base.add(bj * ld + c0) as *const f64;
            let dst = base.add(bj * ld + bj);
            matrixmultiply::dgemm(rows, k, w, -1.0, lhs, ld as isize, 1, rhs, 1, ld as isize, 1.0, dst, ld as isize, 1);
        }
        bj += w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Vec<f64> {
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = (((i * 31 + j * 17) % 23) as f64 - 11.0) * 0.05;
            }
        }
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..n).map(|p| g[i * n + p] * g[j * n + p]).sum();
            }
            a[i * n + i] += 0.5;
        }
        a
    }

    #[test]
    fn solves_across_block_boundaries() {
        for &n in &[1usize, 5, 64, 65, 150] {
            let a = spd(n);
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let mut b: Vec<f64> = (0..n)
                .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
                .collect();
            let c = Cholesky::factor(a, n).unwrap();
            c.solve(&mut b);
            let err = b.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(err < 1e-9, "n={n} err={err}");
        }
    }

    #[test]
    fn reports_indefinite_pivot() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        assert_eq!(Cholesky::factor(a, 2).unwrap_err(), 1);
    }
}
