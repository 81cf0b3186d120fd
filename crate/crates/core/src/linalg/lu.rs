//! Left-looking sparse LU with threshold partial pivoting (Gilbert–Peierls).
//!
//! The factorization computes `P A Q = L U` where `Q` is a caller-supplied
//! column order (natural by default) and `P` comes from pivoting. With a
//! threshold of `0.1` the diagonal entry wins whenever it is within a factor
//! ten of the largest candidate, so symmetric fill-reducing orders are kept
//! for diagonally dominant and M-matrix inputs.

use crate::error::{KemenyError, Result};
use crate::linalg::sparse::CsrMatrix;

const UNSET: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    // L is unit lower triangular, CSC, diagonal stored first in each column.
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    // U is upper triangular, CSC, diagonal stored last in each column.
    up: Vec<usize>,
    ui: Vec<usize>,
    ux: Vec<f64>,
    pinv: Vec<usize>,
    q: Vec<usize>,
}

impl SparseLu {
    pub const DEFAULT_THRESHOLD: f64 = 0.1;

    /// Factorizes in natural column order.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let q: Vec<usize> = (0..a.nrows()).collect();
        Self::factor_with(a, &q, Self::DEFAULT_THRESHOLD)
    }

    /// Factorizes with column order `q` (position → original column).
    pub fn factor_ordered(a: &CsrMatrix, q: &[usize]) -> Result<Self> {
        Self::factor_with(a, q, Self::DEFAULT_THRESHOLD)
    }

    pub fn factor_with(a: &CsrMatrix, q: &[usize], threshold: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(KemenyError::DimensionMismatch(format!(
                "LU of a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let n = a.nrows();
        if q.len() != n {
            return Err(KemenyError::DimensionMismatch("column order length".into()));
        }
        // CSR of Aᵀ is CSC of A.
        let at = a.transpose();
        let est = 4 * a.nnz() + n;
        let mut lu = SparseLu {
            n,
            lp: Vec::with_capacity(n + 1),
            li: Vec::with_capacity(est),
            lx: Vec::with_capacity(est),
            up: Vec::with_capacity(n + 1),
            ui: Vec::with_capacity(est),
            ux: Vec::with_capacity(est),
            pinv: vec![UNSET; n],
            q: q.to_vec(),
        };
        let mut x = vec![0.0; n];
        let mut xi = vec![0usize; n];
        let mut marks = vec![UNSET; n];
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for k in 0..n {
            lu.lp.push(lu.li.len());
            lu.up.push(lu.ui.len());
            let col = q[k];
            let (brows, bvals) = at.row(col);

            // Nonzero pattern of L \ A(:, col) in topological order.
            let mut top = n;
            for &start in brows {
                if marks[start] == k {
                    continue;
                }
                marks[start] = k;
                stack.push((start, 0));
                while let Some(&mut (node, ref mut child)) = stack.last_mut() {
                    let pj = lu.pinv[node];
                    let kids: &[usize] = if pj == UNSET {
                        &[]
                    } else {
                        &lu.li[lu.lp[pj] + 1..lu.lp[pj + 1]]
                    };
                    if let Some(&next) = kids[*child..].iter().find(|&&c| marks[c] != k) {
                        *child = kids.iter().position(|&c| c == next).unwrap() + 1;
                        marks[next] = k;
                        stack.push((next, 0));
                    } else {
                        stack.pop();
                        top -= 1;
                        xi[top] = node;
                    }
                }
            }

            for &i in &xi[top..n] {
                x[i] = 0.0;
            }
            for (&i, &v) in brows.iter().zip(bvals) {
                x[i] = v;
            }
            for p in top..n {
                let j = xi[p];
                let pj = lu.pinv[j];
                if pj == UNSET {
                    continue;
                }
                let xj = x[j];
                for t in lu.lp[pj] + 1..lu.lp[pj + 1] {
                    x[lu.li[t]] -= lu.lx[t] * xj;
                }
            }

            let mut ipiv = UNSET;
            let mut best = -1.0;
            for &i in &xi[top..n] {
                if lu.pinv[i] == UNSET {
                    let t = x[i].abs();
                    if t > best {
                        best = t;
                        ipiv = i;
                    }
                } else {
                    lu.ui.push(lu.pinv[i]);
                    lu.ux.push(x[i]);
                }
            }
            if ipiv == UNSET || best <= 0.0 {
                return Err(KemenyError::Singular(k));
            }
            if lu.pinv[col] == UNSET && marks[col] == k && x[col].abs() >= threshold * best {
                ipiv = col;
            }
            let pivot = x[ipiv];
            lu.ui.push(k);
            lu.ux.push(pivot);
            lu.pinv[ipiv] = k;
            lu.li.push(ipiv);
            lu.lx.push(1.0);
            for &i in &xi[top..n] {
                if lu.pinv[i] == UNSET {
                    lu.li.push(i);
                    lu.lx.push(x[i] / pivot);
                }
                x[i] = 0.0;
            }
        }
        lu.lp.push(lu.li.len());
        lu.up.push(lu.ui.len());
        for i in lu.li.iter_mut() {
            *i = lu.pinv[*i];
        }
        Ok(lu)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Stored entries of L plus U.
    pub fn nnz(&self) -> usize {
        self.lx.len() + self.ux.len()
    }

    /// Approximate heap footprint of the factors in bytes.
    pub fn memory_bytes(&self) -> usize {
        let idx = std::mem::size_of::<usize>();
        self.nnz() * (idx + 8) + 4 * self.n * idx
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (i, &bi) in b.iter().enumerate() {
            y[self.pinv[i]] = bi;
        }
        for j in 0..self.n {
            let yj = y[j];
            if yj != 0.0 {
                for t in self.lp[j] + 1..self.lp[j + 1] {
                    y[self.li[t]] -= self.lx[t] * yj;
                }
            }
        }
        for k in (0..self.n).rev() {
            let d = self.up[k + 1] - 1;
            y[k] /= self.ux[d];
            let yk = y[k];
            if yk != 0.0 {
                for t in self.up[k]..d {
                    y[self.ui[t]] -= self.ux[t] * yk;
                }
            }
        }
        let mut x = vec![0.0; self.n];
        for k in 0..self.n {
            x[self.q[k]] = y[k];
        }
        x
    }

    /// Solves Aᵀ x = b.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut c: Vec<f64> = (0..self.n).map(|k| b[self.q[k]]).collect();
        for k in 0..self.n {
            let d = self.up[k + 1] - 1;
            let mut s = c[k];
            for t in self.up[k]..d {
                s -= self.ux[t] * c[self.ui[t]];
            }
            c[k] = s / self.ux[d];
        }
        for j in (0..self.n).rev() {
            let mut s = c[j];
            for t in self.lp[j] + 1..self.lp[j + 1] {
                s -= self.lx[t] * c[self.li[t]];
            }
            c[j] = s;
        }
        let mut x = vec![0.0; self.n];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = c[self.pinv[i]];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sparse::norm2;

    fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
        let ax = a.mul_vec(x);
        let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
        norm2(&r) / norm2(b)
    }

    #[test]
    fn identity_factors_are_identity() {
        let lu = SparseLu::factor(&CsrMatrix::identity(5)).unwrap();
        assert_eq!(lu.nnz(), 10);
        assert_eq!(lu.solve(&[1.0, 2.0, 3.0, 4.0, 5.0]), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn two_by_two_hand_solve() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        let x = SparseLu::factor(&a).unwrap().solve(&[1.0, 1.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 1, 1.0), (1, 0, 2.0), (1, 2, 1.0), (2, 2, 3.0), (2, 0, 1.0)]).unwrap();
        let lu = SparseLu::factor(&a).unwrap();
        let b = [1.0, 2.0, 3.0];
        assert!(residual(&a, &lu.solve(&b), &b) < 1e-14);
        let xt = lu.solve_transpose(&b);
        assert!(residual(&a.transpose(), &xt, &b) < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(SparseLu::factor(&a), Err(KemenyError::Singular(1))));
    }

    #[test]
    fn substochastic_m_matrix_residual() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 200;
        let mut t = Vec::new();
        for i in 0..n {
            let mut row: Vec<(usize, f64)> = (0..6).map(|_| (rng.random_range(0..n), rng.random::<f64>())).collect();
            row.push(((i + 1) % n, 0.5));
            let s: f64 = row.iter().map(|e| e.1).sum::<f64>() * 1.05;
            t.extend(row.into_iter().map(|(j, v)| (i, j, v / s)));
        }
        let p = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let a = p.identity_minus();
        let order: Vec<usize> = (0..n).rev().collect();
        let lu = SparseLu::factor_ordered(&a, &order).unwrap();
        let b = vec![1.0; n];
        assert!(residual(&a, &lu.solve(&b), &b) <= 1e-10);
        assert!(residual(&a.transpose(), &lu.solve_transpose(&b), &b) <= 1e-10);
    }
}
