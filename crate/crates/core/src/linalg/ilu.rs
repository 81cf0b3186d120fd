//! Zero fill-in incomplete factorizations: ILU(0) and IC(0).

use crate::error::{KemenyError, Result};
use crate::linalg::krylov::Preconditioner;
use crate::linalg::sparse::CsrMatrix;

/// Which factorization a [`SparseFactorization`] summary describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorKind {
    Lu,
    Ilu0,
    Ic0,
}

/// ILU(0): `A ≈ L U` with L unit lower, U upper, both on the pattern of A.
/// Both factors share one CSR array; the unit diagonal of L is implicit.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(KemenyError::DimensionMismatch("ILU(0) needs a square matrix".into()));
        }
        let n = a.nrows();
        let mut lu = a.clone();
        let indptr = lu.indptr().to_vec();
        let indices = lu.indices().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in indptr[i]..indptr[i + 1] {
                if indices[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(KemenyError::Breakdown { row: i, pivot: 0.0 });
            }
        }
        let mut pos = vec![usize::MAX; n];
        let vals = lu.values_mut();
        for i in 0..n {
            for k in indptr[i]..indptr[i + 1] {
                pos[indices[k]] = k;
            }
            for kk in indptr[i]..diag[i] {
                let k = indices[kk];
                let pivot = vals[diag[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return Err(KemenyError::Breakdown { row: k, pivot });
                }
                let lik = vals[kk] / pivot;
                vals[kk] = lik;
                for t in diag[k] + 1..indptr[k + 1] {
                    let p = pos[indices[t]];
                    if p != usize::MAX {
                        vals[p] -= lik * vals[t];
                    }
                }
            }
            let d = vals[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(KemenyError::Breakdown { row: i, pivot: d });
            }
            for k in indptr[i]..indptr[i + 1] {
                pos[indices[k]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn kind(&self) -> FactorKind {
        FactorKind::Ilu0
    }

    /// Stored entries of both factors (the unit diagonal of L excluded).
    pub fn nnz(&self) -> usize {
        self.lu.nnz()
    }

    /// Strictly lower part (without the unit diagonal) and upper part.
    pub fn factors(&self) -> (CsrMatrix, CsrMatrix) {
        let n = self.lu.nrows();
        let mut lt = Vec::new();
        let mut ut = Vec::new();
        for (i, j, v) in self.lu.iter() {
            if j < i {
                lt.push((i, j, v));
            } else {
                ut.push((i, j, v));
            }
        }
        for i in 0..n {
            lt.push((i, i, 1.0));
        }
        (
            CsrMatrix::from_triplets(n, n, &lt).expect("in range"),
            CsrMatrix::from_triplets(n, n, &ut).expect("in range"),
        )
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.lu.nrows();
        let (ip, ix, v) = (self.lu.indptr(), self.lu.indices(), self.lu.values());
        for i in 0..n {
            let mut s = b[i];
            for k in ip[i]..self.diag[i] {
                s -= v[k] * x[ix[k]];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in self.diag[i] + 1..ip[i + 1] {
                s -= v[k] * x[ix[k]];
            }
            x[i] = s / v[self.diag[i]];
        }
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.solve_into(r, z)
    }
}

/// IC(0): `A ≈ L Lᵀ` with L on the lower-triangular pattern of A.
#[derive(Clone, Debug)]
pub struct Ic0 {
    l: CsrMatrix,
    /// Pivots that were reset by the semidefinite variant.
    pub replaced_pivots: usize,
}

impl Ic0 {
    /// Fails on a non-positive pivot.
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        Self::factor_impl(a, None)
    }

    /// Variant for positive semidefinite input (graph Laplacians): a pivot
    /// below `rel_floor · a_ii` is replaced by `a_ii`.
    pub fn factor_semidefinite(a: &CsrMatrix, rel_floor: f64) -> Result<Self> {
        Self::factor_impl(a, Some(rel_floor))
    }

    fn factor_impl(a: &CsrMatrix, floor: Option<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(KemenyError::DimensionMismatch("IC(0) needs a square matrix".into()));
        }
        let n = a.nrows();
        let mut indptr = vec![0];
        let mut indices: Vec<usize> = Vec::with_capacity(a.nnz() / 2 + n);
        let mut values: Vec<f64> = Vec::with_capacity(a.nnz() / 2 + n);
        let mut work = vec![0.0; n];
        let mut replaced = 0;
        for i in 0..n {
            let (cols, vals) = a.row(i);
            let start = indices.len();
            let mut aii = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                if j < i {
                    indices.push(j);
                    values.push(v);
                } else if j == i {
                    aii = v;
                }
            }
            // Row i of L, left to right; `work` holds the finished entries.
            for t in start..indices.len() {
                let j = indices[t];
                let (rs, re) = (indptr[j], indptr[j + 1]);
                let mut s = values[t];
                for q in rs..re - 1 {
                    s -= work[indices[q]] * values[q];
                }
                let ljj = values[re - 1];
                let lij = s / ljj;
                values[t] = lij;
                work[j] = lij;
            }
            let mut d = aii;
            for t in start..indices.len() {
                d -= values[t] * values[t];
            }
            for t in start..indices.len() {
                work[indices[t]] = 0.0;
            }
            if d <= floor.map_or(0.0, |f| f * aii) || !d.is_finite() {
                match floor {
                    Some(_) if aii > 0.0 => {
                        d = aii;
                        replaced += 1;
                    }
                    _ => return Err(KemenyError::Breakdown { row: i, pivot: d }),
                }
            }
            indices.push(i);
            values.push(d.sqrt());
            indptr.push(indices.len());
        }
        Ok(Self { l: CsrMatrix::from_raw(n, n, indptr, indices, values)?, replaced_pivots: replaced })
    }

    pub fn kind(&self) -> FactorKind {
        FactorKind::Ic0
    }

    pub fn lower(&self) -> &CsrMatrix {
        &self.l
    }

    /// x = L⁻¹ b
    pub fn forward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.nrows();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let (c, v) = self.l.row(i);
            let last = c.len() - 1;
            let s: f64 = (0..last).map(|k| v[k] * x[c[k]]).sum();
            x[i] = (b[i] - s) / v[last];
        }
        x
    }

    /// x = L⁻ᵀ b
    pub fn backward(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.nrows();
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let (c, v) = self.l.row(i);
            let last = c.len() - 1;
            x[i] /= v[last];
            let xi = x[i];
            for k in 0..last {
                x[c[k]] -= v[k] * xi;
            }
        }
        x
    }
}

impl Preconditioner for Ic0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let y = self.backward(&self.forward(r));
        z.copy_from_slice(&y);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::lu::SparseLu;

    fn tridiag(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.5));
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
    fn ilu0_is_exact_on_tridiagonal() {
        let a = tridiag(30);
        let ilu = Ilu0::factor(&a).unwrap();
        let (l, u) = ilu.factors();
        let prod = l.matmul(&u).unwrap().to_dense();
        assert!((prod - a.to_dense()).abs().max() < 1e-14);
        assert!(ilu.nnz() <= a.nnz() + 30);
    }

    #[test]
    fn ilu0_is_exact_on_dense_pattern() {
        let a = CsrMatrix::from_dense(
            &nalgebra::dmatrix![3.0, -1.0, -0.5; -1.0, 4.0, -1.0; -0.5, -2.0, 3.0],
            0.0,
        );
        let ilu = Ilu0::factor(&a).unwrap();
        let b = [1.0, 2.0, 3.0];
        let mut x = [0.0; 3];
        ilu.solve_into(&b, &mut x);
        let exact = SparseLu::factor(&a).unwrap().solve(&b);
        for (p, q) in x.iter().zip(&exact) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn missing_diagonal_breaks_down() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(Ilu0::factor(&a), Err(KemenyError::Breakdown { row: 0, .. })));
    }

    #[test]
    fn ic0_exact_on_tridiagonal() {
        let a = tridiag(20);
        let ic = Ic0::factor(&a).unwrap();
        let l = ic.lower();
        let llt = l.matmul(&l.transpose()).unwrap().to_dense();
        assert!((llt - a.to_dense()).abs().max() < 1e-13);
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let mut z = vec![0.0; 20];
        ic.apply(&b, &mut z);
        let az = a.mul_vec(&z);
        assert!(az.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn ic0_rejects_indefinite_but_floor_variant_recovers() {
        // Path-graph Laplacian: singular, exact pivots end in zero.
        let mut t = Vec::new();
        for i in 0..5 {
            let deg = if i == 0 || i == 4 { 1.0 } else { 2.0 };
            t.push((i, i, deg));
            if i + 1 < 5 {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(5, 5, &t).unwrap();
        assert!(Ic0::factor(&a).is_err());
        let ic = Ic0::factor_semidefinite(&a, 1e-8).unwrap();
        assert_eq!(ic.replaced_pivots, 1);
    }
}
