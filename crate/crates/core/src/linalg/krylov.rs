//! Preconditioned Krylov solvers: restarted GMRES, BiCGstab and CG.
//!
//! All three return the best iterate they reached together with the final
//! relative residual `‖b − A x‖ / ‖b‖`; [`KrylovSolution::check`] turns a
//! non-converged run into an error.

use crate::error::{KemenyError, Result};
use crate::linalg::sparse::{axpy, dot, norm2, CsrMatrix};

/// Anything that can compute `y = A x`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y)
    }
}

/// Approximate inverse: `z ≈ A⁻¹ r`.
pub trait Preconditioner: Sync {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KrylovOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// GMRES restart length; ignored by the other methods.
    pub restart: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 1000, restart: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub method: &'static str,
}

impl KrylovSolution {
    pub fn check(self) -> Result<Vec<f64>> {
        if self.converged {
            Ok(self.x)
        } else {
            Err(KemenyError::NotConverged {
                method: self.method,
                iterations: self.iterations,
                residual: self.residual,
            })
        }
    }
}

fn true_residual<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    a.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    norm2(r)
}

/// Right-preconditioned restarted GMRES with modified Gram–Schmidt.
pub fn gmres<A, M>(a: &A, b: &[f64], x0: Option<&[f64]>, m: &M, opts: KrylovOptions) -> KrylovSolution
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
{
    let n = a.dim();
    let restart = opts.restart.max(1).min(n.max(1));
    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return KrylovSolution { x: vec![0.0; n], iterations: 0, residual: 0.0, converged: true, method: "GMRES" };
    }
    let mut r = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut iterations = 0;
    let mut rel = true_residual(a, b, &x, &mut r) / bnorm;

    while rel > opts.tol && iterations < opts.max_iter {
        let beta = norm2(&r);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(restart);
        let mut h = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k = 0;
        while k < restart && iterations < opts.max_iter {
            let mut zk = vec![0.0; n];
            m.apply(&v[k], &mut zk);
            a.apply(&zk, &mut w);
            z.push(zk);
            for i in 0..=k {
                h[i][k] = dot(&w, &v[i]);
                axpy(-h[i][k], &v[i], &mut w);
            }
            h[k + 1][k] = norm2(&w);
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = h[k][k].hypot(h[k + 1][k]);
            if denom == 0.0 {
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            let hk1 = h[k + 1][k];
            h[k][k] = cs[k] * h[k][k] + sn[k] * hk1;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            let hnext = hk1;
            k += 1;
            if g[k].abs() / bnorm <= opts.tol || hnext == 0.0 {
                break;
            }
            v.push(w.iter().map(|t| t / hnext).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / h[i][i];
        }
        for (yi, zi) in y.iter().zip(&z) {
            axpy(*yi, zi, &mut x);
        }
        let prev = rel;
        rel = true_residual(a, b, &x, &mut r) / bnorm;
        if k == 0 || (rel >= prev && iterations >= opts.max_iter) {
            break;
        }
    }
    KrylovSolution { x, iterations, residual: rel, converged: rel <= opts.tol, method: "GMRES" }
}

/// Right-preconditioned BiCGstab.
pub fn bicgstab<A, M>(a: &A, b: &[f64], x0: Option<&[f64]>, m: &M, opts: KrylovOptions) -> KrylovSolution
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
{
    let n = a.dim();
    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return KrylovSolution { x: vec![0.0; n], iterations: 0, residual: 0.0, converged: true, method: "BiCGstab" };
    }
    let mut r = vec![0.0; n];
    let mut rel = true_residual(a, b, &x, &mut r) / bnorm;
    let rhat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut phat = vec![0.0; n];
    let mut shat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut best = (rel, x.clone());
    let mut iterations = 0;
    while rel > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let rho_new = dot(&rhat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.apply(&p, &mut phat);
        a.apply(&phat, &mut v);
        let rv = dot(&rhat, &v);
        if rv == 0.0 {
            break;
        }
        alpha = rho_new / rv;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm2(&s) / bnorm <= opts.tol {
            axpy(alpha, &phat, &mut x);
            rel = true_residual(a, b, &x, &mut r) / bnorm;
            if rel < best.0 {
                best = (rel, x.clone());
            }
            break;
        }
        m.apply(&s, &mut shat);
        a.apply(&shat, &mut t);
        let tt = dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { dot(&t, &s) / tt };
        axpy(alpha, &phat, &mut x);
        axpy(omega, &shat, &mut x);
        for i in 0..n {
            r[i] = s[i] - omega * t[i];
        }
        rho = rho_new;
        rel = norm2(&r) / bnorm;
        if rel <= opts.tol {
            rel = true_residual(a, b, &x, &mut r) / bnorm;
        }
        if rel < best.0 {
            best = (rel, x.clone());
        }
    }
    let (residual, x) = best;
    KrylovSolution { x, iterations, residual, converged: residual <= opts.tol, method: "BiCGstab" }
}

/// Preconditioned conjugate gradients for symmetric positive definite `A`
/// and symmetric positive definite preconditioner.
pub fn cg<A, M>(a: &A, b: &[f64], x0: Option<&[f64]>, m: &M, opts: KrylovOptions) -> KrylovSolution
where
    A: LinearOperator + ?Sized,
    M: Preconditioner + ?Sized,
{
    let n = a.dim();
    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return KrylovSolution { x: vec![0.0; n], iterations: 0, residual: 0.0, converged: true, method: "CG" };
    }
    let mut r = vec![0.0; n];
    let mut rel = true_residual(a, b, &x, &mut r) / bnorm;
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut iterations = 0;
    while rel > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        a.apply(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let alpha = rz / pq;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &q, &mut r);
        rel = norm2(&r) / bnorm;
        if rel <= opts.tol {
            rel = true_residual(a, b, &x, &mut r) / bnorm;
            if rel <= opts.tol {
                break;
            }
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    KrylovSolution { x, iterations, residual: rel, converged: rel <= opts.tol, method: "CG" }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize, shift: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let a = CsrMatrix::identity(10);
        let b: Vec<f64> = (0..10).map(|i| i as f64 + 1.0).collect();
        let opts = KrylovOptions::default();
        for sol in [
            gmres(&a, &b, None, &IdentityPreconditioner, opts),
            bicgstab(&a, &b, None, &IdentityPreconditioner, opts),
            cg(&a, &b, None, &IdentityPreconditioner, opts),
        ] {
            assert!(sol.converged, "{}", sol.method);
            assert_eq!(sol.iterations, 1, "{}", sol.method);
        }
    }

    #[test]
    fn all_methods_solve_spd_system() {
        let a = laplacian_1d(60, 0.01);
        let b = vec![1.0; 60];
        let opts = KrylovOptions { tol: 1e-10, max_iter: 2000, restart: 30 };
        for sol in [
            gmres(&a, &b, None, &IdentityPreconditioner, opts),
            bicgstab(&a, &b, None, &IdentityPreconditioner, opts),
            cg(&a, &b, None, &IdentityPreconditioner, opts),
        ] {
            let method = sol.method;
            let x = sol.check().unwrap();
            let mut r = vec![0.0; 60];
            let res = true_residual(&a, &b, &x, &mut r) / norm2(&b);
            assert!(res <= 1e-10, "{method}: {res}");
        }
    }

    #[test]
    fn iteration_limit_reports_error() {
        let a = laplacian_1d(200, 0.0);
        let b = vec![1.0; 200];
        let sol = cg(&a, &b, None, &IdentityPreconditioner, KrylovOptions { tol: 1e-14, max_iter: 3, restart: 10 });
        assert!(!sol.converged);
        assert!(matches!(sol.check(), Err(KemenyError::NotConverged { iterations: 3, .. })));
    }
}
