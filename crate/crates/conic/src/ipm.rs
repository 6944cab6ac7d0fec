use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::chol::Cholesky;
use crate::problem::{ConeProblem, SparseVec};
use crate::svec::{smat, svec, svec_coords, SQRT2};
use crate::ConicError;

#[derive(Debug, Clone)]
pub struct Settings {
    pub max_iter: usize,
    /// Relative primal and dual residual target.
    pub feas_tol: f64,
    /// Relative duality gap target.
    pub gap_tol: f64,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    pub time_limit: Option<Duration>,
    /// Print one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            max_iter: 120,
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            step_fraction: 0.99,
            time_limit: None,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    MaxIterations,
    TimeLimit,
    /// A dual ray certifies that no primal point exists.
    PrimalInfeasible,
    /// A primal ray certifies that the objective is unbounded below.
    DualInfeasible,
    /// Scaling or factorization broke down before convergence.
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: Status,
    pub x: Vec<f64>,
    pub s_lp: Vec<f64>,
    /// Primal slack of the PSD block in `svec` form.
    pub s_psd: Vec<f64>,
    pub z_lp: Vec<f64>,
    pub z_psd: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Relative residuals measured on the row-equilibrated problem.
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `sᵀz / max(1, |cᵀx|)` on the equilibrated problem.
    pub relative_gap: f64,
    pub iterations: usize,
    pub solve_time: Duration,
}

/// Element of the cone: orthant part plus a dense symmetric block.
#[derive(Debug, Clone)]
struct ConeVec {
    lp: Vec<f64>,
    psd: DMatrix<f64>,
}

impl ConeVec {
    fn zeros(l: usize, k: usize) -> Self {
        ConeVec { lp: vec![0.0; l], psd: DMatrix::zeros(k, k) }
    }

    fn identity(l: usize, k: usize) -> Self {
        ConeVec { lp: vec![1.0; l], psd: DMatrix::identity(k, k) }
    }

    fn dot(&self, other: &ConeVec) -> f64 {
        let lp: f64 = self.lp.iter().zip(&other.lp).map(|(a, b)| a * b).sum();
        lp + self.psd.component_mul(&other.psd).sum()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, a: f64, x: &ConeVec) {
        for (s, v) in self.lp.iter_mut().zip(&x.lp) {
            *s += a * v;
        }
        self.psd += &x.psd * a;
    }

    fn scale(&mut self, a: f64) {
        self.lp.iter_mut().for_each(|v| *v *= a);
        self.psd *= a;
    }

    /// Smallest value of `t` such that `self + t e` is on the cone boundary,
    /// i.e. the negated minimum eigenvalue over all blocks.
    fn max_violation(&self) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for v in &self.lp {
            m = m.max(-v);
        }
        if self.psd.nrows() > 0 {
            let e = self.psd.clone().symmetric_eigenvalues();
            m = m.max(-e.min());
        }
        m
    }
}

/// Nesterov-Todd scaling at a strictly feasible pair.
struct Scaling {
    /// `sqrt(s / z)` per orthant row.
    d: Vec<f64>,
    lambda_lp: Vec<f64>,
    r: DMatrix<f64>,
    rinv_t: DMatrix<f64>,
    /// Diagonal of the scaled point.
    lambda_psd: Vec<f64>,
}

impl Scaling {
    fn new(s: &ConeVec, z: &ConeVec) -> Option<Scaling> {
        let mut d = Vec::with_capacity(s.lp.len());
        let mut lambda_lp = Vec::with_capacity(s.lp.len());
        for (&si, &zi) in s.lp.iter().zip(&z.lp) {
            if !(si > 0.0 && zi > 0.0) {
                return None;
            }
            d.push((si / zi).sqrt());
            lambda_lp.push((si * zi).sqrt());
        }
        let k = s.psd.nrows();
        if k == 0 {
            return Some(Scaling {
                d,
                lambda_lp,
                r: DMatrix::zeros(0, 0),
                rinv_t: DMatrix::zeros(0, 0),
                lambda_psd: Vec::new(),
            });
        }
        let ls = nalgebra::Cholesky::new(symmetrize(&s.psd))?.l();
        let lz = nalgebra::Cholesky::new(symmetrize(&z.psd))?.l();
        let m = lz.transpose() * &ls;
        let svd = m.svd(true, true);
        let u = svd.u?;
        let v = svd.v_t?.transpose();
        let sig = svd.singular_values;
        if sig.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return None;
        }
        let inv_sqrt = DMatrix::from_diagonal(&sig.map(|x| 1.0 / x.sqrt()));
        let r = &ls * &v * &inv_sqrt;
        let rinv_t = &lz * &u * &inv_sqrt;
        Some(Scaling { d, lambda_lp, r, rinv_t, lambda_psd: sig.iter().copied().collect() })
    }

    /// z-space to scaled space.
    fn w(&self, z: &ConeVec) -> ConeVec {
        ConeVec {
            lp: z.lp.iter().zip(&self.d).map(|(v, d)| v * d).collect(),
            psd: self.r.transpose() * &z.psd * &self.r,
        }
    }

    /// Scaled space to z-space.
    fn w_inv(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.iter().zip(&self.d).map(|(v, d)| v / d).collect(),
            psd: &self.rinv_t * &u.psd * self.rinv_t.transpose(),
        }
    }

    /// s-space to scaled space: `W⁻ᵀ`.
    fn w_inv_t(&self, s: &ConeVec) -> ConeVec {
        ConeVec {
            lp: s.lp.iter().zip(&self.d).map(|(v, d)| v / d).collect(),
            psd: self.rinv_t.transpose() * &s.psd * &self.rinv_t,
        }
    }

    /// s-space to z-space: `(WᵀW)⁻¹`.
    fn wtw_inv(&self, u: &ConeVec) -> ConeVec {
        let p = self.p();
        ConeVec {
            lp: u.lp.iter().zip(&self.d).map(|(v, d)| v / (d * d)).collect(),
            psd: &p * &u.psd * &p,
        }
    }

    fn p(&self) -> DMatrix<f64> {
        &self.rinv_t * self.rinv_t.transpose()
    }

    fn lambda(&self) -> ConeVec {
        ConeVec {
            lp: self.lambda_lp.clone(),
            psd: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.lambda_psd.clone())),
        }
    }

    /// Solves `λ ∘ u = r` for `u`.
    fn lambda_solve(&self, r: &ConeVec) -> ConeVec {
        let lp = r.lp.iter().zip(&self.lambda_lp).map(|(v, l)| v / l).collect();
        let k = self.lambda_psd.len();
        let mut psd = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                psd[(i, j)] = 2.0 * r.psd[(i, j)] / (self.lambda_psd[i] + self.lambda_psd[j]);
            }
        }
        ConeVec { lp, psd }
    }

    /// Largest step keeping `λ + α Δ` in the cone.
    fn max_step(&self, delta: &ConeVec) -> f64 {
        let mut alpha = f64::INFINITY;
        for (dv, l) in delta.lp.iter().zip(&self.lambda_lp) {
            if *dv < 0.0 {
                alpha = alpha.min(-l / dv);
            }
        }
        let k = self.lambda_psd.len();
        if k > 0 {
            let mut m = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..k {
                    m[(i, j)] = delta.psd[(i, j)] / (self.lambda_psd[i] * self.lambda_psd[j]).sqrt();
                }
            }
            let emin = symmetrize(&m).symmetric_eigenvalues().min();
            if emin < 0.0 {
                alpha = alpha.min(-1.0 / emin);
            }
        }
        alpha
    }
}

/// Whether `v + t d` is strictly inside the cone.
fn interior_after(v: &ConeVec, d: &ConeVec, t: f64) -> bool {
    if v.lp.iter().zip(&d.lp).any(|(a, b)| !(a + t * b > 0.0)) {
        return false;
    }
    v.psd.nrows() == 0 || nalgebra::Cholesky::new(symmetrize(&(&v.psd + &d.psd * t))).is_some()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Jordan product: elementwise on the orthant, `(AB + BA) / 2` on the block.
fn jordan(a: &ConeVec, b: &ConeVec) -> ConeVec {
    ConeVec {
        lp: a.lp.iter().zip(&b.lp).map(|(x, y)| x * y).collect(),
        psd: symmetrize(&(&a.psd * &b.psd)),
    }
}

/// Row-equilibrated copy of the problem together with the factors needed to
/// map results back.
struct Scaled<'a> {
    prob: &'a ConeProblem,
    c: Vec<f64>,
    c_scale: f64,
    rows: Vec<SparseVec>,
    row_scale: Vec<f64>,
    k: usize,
    coords: Vec<(usize, usize)>,
    h: ConeVec,
}

impl<'a> Scaled<'a> {
    fn new(prob: &'a ConeProblem) -> Self {
        let c_norm = prob.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let c_scale = if c_norm > 0.0 { c_norm } else { 1.0 };
        let mut rows = Vec::with_capacity(prob.lp_rows.len());
        let mut h_lp = Vec::with_capacity(prob.lp_rows.len());
        let mut row_scale = Vec::with_capacity(prob.lp_rows.len());
        for (row, &h) in prob.lp_rows.iter().zip(&prob.h_lp) {
            let m = row.max_abs();
            let sc = if m > 0.0 { m } else { 1.0 };
            rows.push(SparseVec { idx: row.idx.clone(), val: row.val.iter().map(|v| v / sc).collect() });
            h_lp.push(h / sc);
            row_scale.push(sc);
        }
        let k = prob.psd_order;
        let h = ConeVec {
            lp: h_lp.clone(),
            psd: if k > 0 { smat(&prob.h_psd, k) } else { DMatrix::zeros(0, 0) },
        };
        Scaled {
            prob,
            c: prob.c.iter().map(|v| v / c_scale).collect(),
            c_scale,
            rows,
            row_scale,
            k,
            coords: svec_coords(k),
            h,
        }
    }

    fn n(&self) -> usize {
        self.c.len()
    }

    fn l(&self) -> usize {
        self.rows.len()
    }

    fn g_mul(&self, x: &[f64]) -> ConeVec {
        let lp = self.rows.iter().map(|r| r.dot(x)).collect();
        let psd = if self.k > 0 {
            let mut v = vec![0.0; self.coords.len()];
            for (col, &xj) in self.prob.psd_cols.iter().zip(x) {
                if xj != 0.0 {
                    for (a, g) in col.iter() {
                        v[a] += g * xj;
                    }
                }
            }
            smat(&v, self.k)
        } else {
            DMatrix::zeros(0, 0)
        };
        ConeVec { lp, psd }
    }

    fn gt_mul(&self, z: &ConeVec) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (row, &zi) in self.rows.iter().zip(&z.lp) {
            if zi != 0.0 {
                for (j, g) in row.iter() {
                    out[j] += g * zi;
                }
            }
        }
        if self.k > 0 {
            let zv = svec(&z.psd);
            for (o, col) in out.iter_mut().zip(&self.prob.psd_cols) {
                *o += col.iter().map(|(a, g)| g * zv[a]).sum::<f64>();
            }
        }
        out
    }

    /// Dense `Gᵀ (WᵀW)⁻¹ G`, lower triangle, row-major.
    fn normal_matrix(&self, lp_weight: &[f64], p: &DMatrix<f64>) -> Vec<f64> {
        let n = self.n();
        let mut h = vec![0.0; n * n];
        for (row, &w) in self.rows.iter().zip(lp_weight) {
            for (a, va) in row.iter() {
                let wa = w * va;
                for (b, vb) in row.iter() {
                    if b <= a {
                        h[a * n + b] += wa * vb;
                    }
                }
            }
        }
        if self.k > 0 {
            let k = self.k;
            let pm: Vec<f64> = (0..k * k).map(|t| p[(t / k, t % k)]).collect();
            let coords = &self.coords;
            let kron = |alpha: usize, beta: usize| -> f64 {
                let (i, j) = coords[alpha];
                let (r, s) = coords[beta];
                let pir = pm[i * k + r];
                match (i == j, r == s) {
                    (true, true) => pir * pir,
                    (true, false) => SQRT2 * pir * pm[i * k + s],
                    (false, true) => SQRT2 * pir * pm[j * k + r],
                    (false, false) => pir * pm[j * k + s] + pm[i * k + s] * pm[j * k + r],
                }
            };
            let cols = &self.prob.psd_cols;
            for a in 0..n {
                let ca = &cols[a];
                for b in 0..=a {
                    let cb = &cols[b];
                    let mut acc = 0.0;
                    for (alpha, ga) in ca.iter() {
                        for (beta, gb) in cb.iter() {
                            acc += ga * gb * kron(alpha, beta);
                        }
                    }
                    h[a * n + b] += acc;
                }
            }
        }
        h
    }
}

fn sym_lower_matvec(h: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let row = &h[i * n..i * n + i];
        let mut acc = h[i * n + i] * x[i];
        for (j, hij) in row.iter().enumerate() {
            acc += hij * x[j];
            y[j] += hij * x[i];
        }
        y[i] += acc;
    }
    y
}

/// Factored normal equations with one step of iterative refinement on solve.
struct Normal {
    h: Vec<f64>,
    chol: Cholesky,
}

impl Normal {
    fn factor(h: Vec<f64>, n: usize) -> Option<Normal> {
        let max_diag = (0..n).map(|i| h[i * n + i]).fold(0.0f64, f64::max).max(1e-300);
        let mut reg = 0.0;
        for _ in 0..8 {
            let mut a = h.clone();
            if reg > 0.0 {
                for i in 0..n {
                    a[i * n + i] += reg;
                }
            }
            if let Ok(chol) = Cholesky::factor(a, n) {
                return Some(Normal { h, chol });
            }
            reg = if reg == 0.0 { 1e-14 * max_diag } else { reg * 100.0 };
        }
        None
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut x = rhs.to_vec();
        self.chol.solve(&mut x);
        let hx = sym_lower_matvec(&self.h, n, &x);
        let mut r: Vec<f64> = rhs.iter().zip(&hx).map(|(a, b)| a - b).collect();
        self.chol.solve(&mut r);
        for (xi, ri) in x.iter_mut().zip(&r) {
            *xi += ri;
        }
        x
    }
}

#[derive(Clone)]
struct Direction {
    dx: Vec<f64>,
    ds: ConeVec,
    dz: ConeVec,
    ds_scaled: ConeVec,
    dz_scaled: ConeVec,
}

impl Direction {
    fn add_scaled(&mut self, a: f64, o: &Direction) {
        for (v, w) in self.dx.iter_mut().zip(&o.dx) {
            *v += a * w;
        }
        self.ds.axpy(a, &o.ds);
        self.dz.axpy(a, &o.dz);
        self.ds_scaled.axpy(a, &o.ds_scaled);
        self.dz_scaled.axpy(a, &o.dz_scaled);
    }
}

/// Solves
/// ```text
/// Gᵀ Δz = r1,  G Δx + Δs = r2,  λ ∘ (W Δz + W⁻ᵀ Δs) = r3
/// ```
fn newton(sp: &Scaled, sc: &Scaling, normal: &Normal, r1: &[f64], r2: &ConeVec, r3: &ConeVec) -> Direction {
    let mut d = newton_once(sp, sc, normal, r1, r2, r3);
    let lambda = sc.lambda();
    let residual = |d: &Direction| {
        let e1: Vec<f64> = r1.iter().zip(sp.gt_mul(&d.dz)).map(|(a, b)| a - b).collect();
        let mut e2 = r2.clone();
        e2.axpy(-1.0, &sp.g_mul(&d.dx));
        e2.axpy(-1.0, &d.ds);
        let mut sum = d.ds_scaled.clone();
        sum.axpy(1.0, &d.dz_scaled);
        let mut e3 = r3.clone();
        e3.axpy(-1.0, &jordan(&lambda, &sum));
        let norm = (e1.iter().map(|v| v * v).sum::<f64>() + e2.dot(&e2) + e3.dot(&e3)).sqrt();
        (e1, e2, e3, norm)
    };
    let scale = (r1.iter().map(|v| v * v).sum::<f64>() + r2.dot(r2) + r3.dot(r3)).sqrt().max(1.0);
    let (mut e1, mut e2, mut e3, mut err) = residual(&d);
    for _ in 0..3 {
        if err <= 1e-14 * scale {
            break;
        }
        let mut next = d.clone();
        next.add_scaled(1.0, &newton_once(sp, sc, normal, &e1, &e2, &e3));
        let (f1, f2, f3, next_err) = residual(&next);
        if next_err >= err {
            break;
        }
        (d, e1, e2, e3, err) = (next, f1, f2, f3, next_err);
    }
    d
}

fn newton_once(sp: &Scaled, sc: &Scaling, normal: &Normal, r1: &[f64], r2: &ConeVec, r3: &ConeVec) -> Direction {
    let u = sc.lambda_solve(r3);
    let mut t = sc.w_inv(&u);
    t.axpy(-1.0, &sc.wtw_inv(r2));
    let gt = sp.gt_mul(&t);
    let rhs: Vec<f64> = r1.iter().zip(&gt).map(|(a, b)| a - b).collect();
    let dx = normal.solve(&rhs);
    let mut dz = sc.wtw_inv(&sp.g_mul(&dx));
    dz.axpy(1.0, &t);
    let dz_scaled = sc.w(&dz);
    // Taking ds from the linear equation keeps the primal residual exact
    // when W is badly conditioned near the boundary.
    let mut ds = r2.clone();
    ds.axpy(-1.0, &sp.g_mul(&dx));
    let ds_scaled = sc.w_inv_t(&ds);
    Direction { dx, ds, dz, ds_scaled, dz_scaled }
}

/// Solves the cone program with default initialization (least-norm primal
/// and dual points shifted into the cone interior, `τ = κ = 1`).
pub fn solve(prob: &ConeProblem, settings: &Settings) -> Result<Solution, ConicError> {
    prob.validate()?;
    let start = Instant::now();
    let sp = Scaled::new(prob);
    let n = sp.n();
    let l = sp.l();
    let k = sp.k;
    let nu = (l + k) as f64;

    let h_norm = sp.h.norm().max(1.0);
    let c_norm = sp.c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);

    // Initial point from the least-norm problems with identity scaling.
    let ident = DMatrix::identity(k, k);
    let normal0 = Normal::factor(sp.normal_matrix(&vec![1.0; l], &ident), n);
    let Some(normal0) = normal0 else {
        return Ok(failure(&sp, Status::NumericalFailure, vec![0.0; n], start));
    };
    let gth = sp.gt_mul(&sp.h);
    let mut x = normal0.solve(&gth);
    let mut s = sp.h.clone();
    s.axpy(-1.0, &sp.g_mul(&x));
    let w = normal0.solve(&sp.c);
    let mut z = sp.g_mul(&w);
    z.scale(-1.0);
    for v in [&mut s, &mut z] {
        let t = v.max_violation();
        if t >= -1e-8 * v.norm().max(1.0) {
            v.axpy(1.0 + t.max(0.0), &ConeVec::identity(l, k));
        }
    }

    let mut tau = 1.0;
    let mut kappa = 1.0;
    let neg_c: Vec<f64> = sp.c.iter().map(|v| -v).collect();
    let zero_r3 = ConeVec::zeros(l, k);

    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    let mut stalls = 0;
    let mut best: Option<(f64, Vec<f64>, ConeVec, ConeVec, f64, usize)> = None;
    for it in 0..=settings.max_iter {
        iterations = it;
        let gtz = sp.gt_mul(&z);
        let hz = sp.h.dot(&z);
        let cx: f64 = sp.c.iter().zip(&x).map(|(a, b)| a * b).sum();
        let rx: Vec<f64> = gtz.iter().zip(&sp.c).map(|(a, b)| a + b * tau).collect();
        let mut hrz = sp.g_mul(&x);
        hrz.axpy(1.0, &s);
        let mut rz = hrz.clone();
        rz.axpy(-tau, &sp.h);
        let rt = kappa + cx + hz;
        let gap = s.dot(&z);

        let pcost = cx / tau;
        let dcost = -hz / tau;
        let pres = rz.norm() / tau / h_norm;
        let dres = rx.iter().map(|v| v * v).sum::<f64>().sqrt() / tau / c_norm;
        let rel_gap = gap.max(0.0) / (tau * tau) / pcost.abs().max(1.0);
        let obj_gap = (pcost - dcost).abs() / pcost.abs().max(1.0);

        let score = pres.max(dres).max(rel_gap).max(obj_gap);
        if best.as_ref().is_none_or(|b| score < b.0) {
            best = Some((score, x.clone(), s.clone(), z.clone(), tau, it));
        }
        if settings.verbose {
            eprintln!(
                "{it:3} pcost {pcost:+.8e} dcost {dcost:+.8e} gap {:.2e} pres {pres:.2e} dres {dres:.2e} k/t {:.1e}",
                gap / (tau * tau),
                kappa / tau
            );
        }
        if pres <= settings.feas_tol
            && dres <= settings.feas_tol
            && rel_gap <= settings.gap_tol
            && obj_gap <= settings.gap_tol.max(10.0 * settings.feas_tol)
        {
            status = Status::Optimal;
            break;
        }
        // Certificates: a dual ray with hᵀz < 0 or a primal ray with cᵀx < 0.
        if hz < 0.0 && gtz.iter().map(|v| v * v).sum::<f64>().sqrt() / c_norm / -hz <= settings.feas_tol {
            status = Status::PrimalInfeasible;
            break;
        }
        if cx < 0.0 && hrz.norm() / h_norm / -cx <= settings.feas_tol {
            status = Status::DualInfeasible;
            break;
        }
        if it == settings.max_iter {
            break;
        }
        if best.as_ref().is_some_and(|b| it >= b.5 + 15) {
            status = Status::NumericalFailure;
            break;
        }
        if let Some(limit) = settings.time_limit {
            if start.elapsed() >= limit {
                status = Status::TimeLimit;
                break;
            }
        }

        let Some(sc) = Scaling::new(&s, &z) else {
            status = Status::NumericalFailure;
            break;
        };
        let lp_weight: Vec<f64> = sc.d.iter().map(|d| 1.0 / (d * d)).collect();
        let Some(normal) = Normal::factor(sp.normal_matrix(&lp_weight, &sc.p()), n) else {
            status = Status::NumericalFailure;
            break;
        };
        let mu = (gap + tau * kappa) / (nu + 1.0);
        let lambda = sc.lambda();
        let lam_sq = jordan(&lambda, &lambda);
        // Direction per unit dτ.
        let unit = newton(&sp, &sc, &normal, &neg_c, &sp.h, &zero_r3);
        let unit_coef = sp.c.iter().zip(&unit.dx).map(|(a, b)| a * b).sum::<f64>() + sp.h.dot(&unit.dz) - kappa / tau;

        let mut sigma = 0.0;
        let mut corr: Option<(ConeVec, f64)> = None;
        let mut step = 0.0;
        let mut dir = None;
        for pass in 0..3 {
            if pass == 2 {
                if step >= 1e-3 {
                    break;
                }
                // Mehrotra step stalled: fall back to a pure centering step.
                sigma = 1.0;
                corr = Some((ConeVec::zeros(l, k), 0.0));
            }
            let eta = 1.0 - sigma;
            let r1: Vec<f64> = rx.iter().map(|v| -eta * v).collect();
            let mut r2 = rz.clone();
            r2.scale(-eta);
            let mut r3 = lam_sq.clone();
            r3.scale(-1.0);
            let mut rk = -tau * kappa;
            if let Some((ref c3, ck)) = corr {
                r3.axpy(-1.0, c3);
                r3.axpy(sigma * mu, &ConeVec::identity(l, k));
                rk += sigma * mu - ck;
            }
            let mut d = newton(&sp, &sc, &normal, &r1, &r2, &r3);
            let rhs = -eta * rt - sp.c.iter().zip(&d.dx).map(|(a, b)| a * b).sum::<f64>() - sp.h.dot(&d.dz) - rk / tau;
            let dtau = rhs / unit_coef;
            d.add_scaled(dtau, &unit);
            let dkappa = (rk - kappa * dtau) / tau;

            let mut t = sc.max_step(&d.ds_scaled).min(sc.max_step(&d.dz_scaled));
            if dtau < 0.0 {
                t = t.min(-tau / dtau);
            }
            if dkappa < 0.0 {
                t = t.min(-kappa / dkappa);
            }
            if pass == 0 {
                step = t.min(1.0);
                sigma = (1.0 - step).powi(3);
                corr = Some((jordan(&d.ds_scaled, &d.dz_scaled), dtau * dkappa));
            } else {
                let cand = (settings.step_fraction * t).min(1.0);
                if pass == 1 || cand > step {
                    step = cand;
                    dir = Some((d, dtau, dkappa));
                }
            }
        }
        let (dir, dtau, dkappa) = dir.expect("corrector pass ran");
        // The ratio test runs in scaled space; confirm the unscaled point.
        for _ in 0..40 {
            if !step.is_finite() || (interior_after(&s, &dir.ds, step) && interior_after(&z, &dir.dz, step)) {
                break;
            }
            step *= 0.8;
        }
        if settings.verbose {
            eprintln!("    sigma {sigma:.2e} step {step:.3e}");
        }
        if !step.is_finite() {
            status = Status::NumericalFailure;
            break;
        }
        stalls = if step < 1e-4 { stalls + 1 } else { 0 };
        if stalls > 2 {
            status = Status::NumericalFailure;
            break;
        }
        for (xi, d) in x.iter_mut().zip(&dir.dx) {
            *xi += step * d;
        }
        s.axpy(step, &dir.ds);
        z.axpy(step, &dir.dz);
        s.psd = symmetrize(&s.psd);
        z.psd = symmetrize(&z.psd);
        tau += step * dtau;
        kappa += step * dkappa;
    }

    if status != Status::Optimal {
        if let Some((_, bx, bs, bz, btau, bit)) = best {
            if bit != iterations && matches!(status, Status::MaxIterations | Status::TimeLimit | Status::NumericalFailure) {
                x = bx;
                s = bs;
                z = bz;
                tau = btau;
            }
        }
    }
    if matches!(status, Status::PrimalInfeasible | Status::DualInfeasible) {
        return Ok(finish(&sp, status, x, s, z, iterations, start));
    }
    x.iter_mut().for_each(|v| *v /= tau);
    s.scale(1.0 / tau);
    z.scale(1.0 / tau);
    Ok(finish(&sp, status, x, s, z, iterations, start))
}

fn residuals(sp: &Scaled, x: &[f64], s: &ConeVec, z: &ConeVec) -> (f64, f64, f64) {
    let mut rp = sp.g_mul(x);
    rp.axpy(1.0, s);
    rp.axpy(-1.0, &sp.h);
    let gtz = sp.gt_mul(z);
    let rd: f64 = gtz.iter().zip(&sp.c).map(|(a, b)| (a + b) * (a + b)).sum::<f64>().sqrt();
    let pcost: f64 = sp.c.iter().zip(x).map(|(a, b)| a * b).sum();
    let h_norm = sp.h.norm().max(1.0);
    let c_norm = sp.c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    (rp.norm() / h_norm, rd / c_norm, s.dot(z).max(0.0) / pcost.abs().max(1.0))
}

fn finish(sp: &Scaled, status: Status, x: Vec<f64>, s: ConeVec, z: ConeVec, iterations: usize, start: Instant) -> Solution {
    let (pres, dres, gap) = residuals(sp, &x, &s, &z);
    let primal_objective: f64 = sp.prob.c.iter().zip(&x).map(|(a, b)| a * b).sum();
    let dual_objective = -sp.h.dot(&z) * sp.c_scale;
    let s_lp = s.lp.iter().zip(&sp.row_scale).map(|(v, r)| v * r).collect();
    let z_lp = z.lp.iter().zip(&sp.row_scale).map(|(v, r)| v * sp.c_scale / r).collect();
    let (s_psd, z_psd) = if sp.k > 0 {
        (svec(&s.psd), svec(&(z.psd * sp.c_scale)))
    } else {
        (Vec::new(), Vec::new())
    };
    Solution {
        status,
        x,
        s_lp,
        s_psd,
        z_lp,
        z_psd,
        primal_objective,
        dual_objective,
        primal_residual: pres,
        dual_residual: dres,
        relative_gap: gap,
        iterations,
        solve_time: start.elapsed(),
    }
}

fn failure(sp: &Scaled, status: Status, x: Vec<f64>, start: Instant) -> Solution {
    let l = sp.l();
    let k = sp.k;
    finish(sp, status, x, ConeVec::zeros(l, k), ConeVec::zeros(l, k), 0, start)
}
