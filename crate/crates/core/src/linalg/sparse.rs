//! Compressed sparse row storage and the handful of kernels the solvers need.

use nalgebra::DMatrix;

use crate::error::{KemenyError, Result};

/// Real sparse matrix in CSR layout. Column indices within a row are sorted
/// and unique; explicit zeros are allowed but never created by the kernels
/// here unless asked for.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from raw CSR arrays, checking structure.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 || indices.len() != values.len() {
            return Err(KemenyError::DimensionMismatch("bad CSR array lengths".into()));
        }
        if indptr[nrows] != indices.len() {
            return Err(KemenyError::DimensionMismatch("indptr does not match nnz".into()));
        }
        for r in 0..nrows {
            if indptr[r] > indptr[r + 1] {
                return Err(KemenyError::InvalidInput("indptr not monotone".into()));
            }
            let row = &indices[indptr[r]..indptr[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c >= ncols) {
                return Err(KemenyError::InvalidInput(format!(
                    "row {r}: column indices unsorted, duplicated or out of range"
                )));
            }
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    /// Builds from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(KemenyError::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside {nrows}x{ncols}"
                )));
            }
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_unstable_by_key(|e| e.0);
            for &(c, v) in &scratch {
                if indices.len() > indptr[r] && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { nrows, ncols, indptr, indices, values })
    }

    /// Sparse copy of a dense matrix; entries with `|a| <= drop` are skipped.
    pub fn from_dense(a: &DMatrix<f64>, drop: f64) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != 0.0 && v.abs() > drop {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows: a.nrows(), ncols: a.ncols(), indptr, indices, values }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] += v;
        }
        d
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Iterates over stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    /// y = Aᵀ x
    pub fn mul_vec_transpose(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (i, j, v) in self.iter() {
            indices[next[j]] = i;
            values[next[j]] = v;
            next[j] += 1;
        }
        Self { nrows: self.ncols, ncols: self.nrows, indptr: counts, indices, values }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// alpha·A + beta·B.
    pub fn add_scaled(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(KemenyError::DimensionMismatch(format!(
                "{}x{} + {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut indptr = vec![0];
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let take_a = q >= cb.len() || (p < ca.len() && ca[p] < cb[q]);
                let take_b = p >= ca.len() || (q < cb.len() && cb[q] < ca[p]);
                if take_a {
                    indices.push(ca[p]);
                    values.push(alpha * va[p]);
                    p += 1;
                } else if take_b {
                    indices.push(cb[q]);
                    values.push(beta * vb[q]);
                    q += 1;
                } else {
                    indices.push(ca[p]);
                    values.push(alpha * va[p] + beta * vb[q]);
                    p += 1;
                    q += 1;
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { nrows: self.nrows, ncols: self.ncols, indptr, indices, values })
    }

    /// Sparse product A·B (Gustavson).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.nrows {
            return Err(KemenyError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut pattern = Vec::new();
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            pattern.clear();
            let (ca, va) = self.row(i);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = other.row(k);
                for (&j, &b) in cb.iter().zip(vb) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            pattern.sort_unstable();
            for &j in &pattern {
                indices.push(j);
                values.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        Ok(Self { nrows: self.nrows, ncols: other.ncols, indptr, indices, values })
    }

    /// Contiguous sub-block `rows × cols`.
    pub fn submatrix(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in rows.clone() {
            let (c, v) = self.row(i);
            let lo = c.partition_point(|&j| j < cols.start);
            let hi = c.partition_point(|&j| j < cols.end);
            for k in lo..hi {
                indices.push(c[k] - cols.start);
                values.push(v[k]);
            }
            indptr.push(indices.len());
        }
        Self { nrows: rows.len(), ncols: cols.len(), indptr, indices, values }
    }

    /// Principal submatrix on an arbitrary, ordered index set.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.ncols];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut triplets = Vec::new();
        for (k, &i) in idx.iter().enumerate() {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if pos[j] != usize::MAX {
                    triplets.push((k, pos[j], x));
                }
            }
        }
        Self::from_triplets(idx.len(), idx.len(), &triplets).expect("indices in range")
    }

    /// Symmetric permutation: entry (perm[i], perm[j]) of A becomes (i, j).
    pub fn permute(&self, perm: &[usize]) -> Self {
        self.select(perm)
    }

    /// Drops stored entries with `|a| <= tol`.
    pub fn prune(&self, tol: f64) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if x != 0.0 && x.abs() > tol {
                    indices.push(j);
                    values.push(x);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows: self.nrows, ncols: self.ncols, indptr, indices, values }
    }

    /// I − A for square A.
    pub fn identity_minus(&self) -> Self {
        CsrMatrix::identity(self.nrows)
            .add_scaled(1.0, self, -1.0)
            .expect("square matrix")
    }

    /// Pattern of A + Aᵀ with unit values and no diagonal.
    pub fn symmetrized_pattern(&self) -> Self {
        let mut triplets = Vec::with_capacity(2 * self.nnz());
        for (i, j, _) in self.iter() {
            if i != j {
                triplets.push((i, j, 1.0));
                triplets.push((j, i, 1.0));
            }
        }
        let mut s = Self::from_triplets(self.nrows, self.ncols, &triplets).expect("in range");
        s.values.iter_mut().for_each(|v| *v = 1.0);
        s
    }

    pub fn is_structurally_symmetric(&self) -> bool {
        self.is_square() && self.iter().all(|(i, j, _)| self.row(j).0.binary_search(&i).is_ok())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square() && self.iter().all(|(i, j, v)| (self.get(j, i) - v).abs() <= tol)
    }

    /// Kronecker product A ⊗ B.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.nrows, other.ncols);
        let mut triplets = Vec::with_capacity(self.nnz() * other.nnz());
        for (i, j, a) in self.iter() {
            for (k, l, b) in other.iter() {
                triplets.push((i * p + k, j * q + l, a * b));
            }
        }
        Self::from_triplets(self.nrows * p, self.ncols * q, &triplets).expect("in range")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
