//! Chains, stationary vectors, block partitions and stochastic complements.

use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{KemenyError, Result};
use crate::linalg::sparse::{dot, CsrMatrix};
use crate::linalg::{fill_reducing_order, SparseLu};

/// Rows within this distance of 1 are rescaled to sum to 1 exactly.
pub const RENORMALIZE_TOL: f64 = 1e-8;
/// Row-sum tolerance that holds after construction.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Default tolerance on `‖πᵀP − πᵀ‖₁`.
pub const STATIONARY_TOL: f64 = 1e-10;
/// Above this size `stationary` switches to power iteration by default.
pub const DIRECT_STATIONARY_MAX: usize = 50_000;

/// Row-stochastic sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    p: CsrMatrix,
}

impl StochasticMatrix {
    /// Validates nonnegativity and unit row sums; rows off by at most
    /// [`RENORMALIZE_TOL`] are rescaled, exact zeros are dropped.
    pub fn new(p: CsrMatrix) -> Result<Self> {
        if !p.is_square() || p.nrows() == 0 {
            return Err(KemenyError::DimensionMismatch(format!(
                "transition matrix must be square and nonempty, got {}x{}",
                p.nrows(),
                p.ncols()
            )));
        }
        if let Some((row, col, value)) = p.iter().find(|e| e.2 < 0.0 || !e.2.is_finite()) {
            return Err(KemenyError::NegativeEntry { row, col, value });
        }
        let mut p = p.prune(0.0);
        for (row, &sum) in p.row_sums().iter().enumerate() {
            if (sum - 1.0).abs() > RENORMALIZE_TOL {
                return Err(KemenyError::NotStochastic { row, sum });
            }
        }
        renormalize_rows(&mut p);
        Ok(Self { p })
    }

    pub fn from_dense(p: &DMatrix<f64>) -> Result<Self> {
        Self::new(CsrMatrix::from_dense(p, 0.0))
    }

    /// Complements and other matrices that are stochastic up to rounding.
    pub(crate) fn from_trusted(p: CsrMatrix) -> Self {
        let mut p = p.prune(0.0);
        for v in p.values_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mut p = p.prune(0.0);
        renormalize_rows(&mut p);
        Self { p }
    }

    /// All entries equal to 1/n.
    pub fn uniform(n: usize) -> Self {
        let v = 1.0 / n as f64;
        let t: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j, v))).collect();
        Self { p: CsrMatrix::from_triplets(n, n, &t).expect("in range") }
    }

    /// Adjacency matrix of the directed cycle 0 → 1 → … → n−1 → 0.
    pub fn directed_cycle(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        Self { p: CsrMatrix::from_triplets(n, n, &t).expect("in range") }
    }

    /// `[[1−a, a], [b, 1−b]]`.
    pub fn two_state(a: f64, b: f64) -> Result<Self> {
        Self::from_dense(&nalgebra::dmatrix![1.0 - a, a; b, 1.0 - b])
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.p.nnz()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.p
    }

    pub fn into_matrix(self) -> CsrMatrix {
        self.p
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.p.to_dense()
    }

    pub fn check_irreducible(&self) -> IrreducibilityReport {
        check_irreducible(&self.p)
    }

    /// Symmetric permutation; state `perm[k]` becomes state `k`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        Self { p: self.p.permute(perm) }
    }

    /// Restriction to `states` with rows renormalized.
    pub fn restrict(&self, states: &[usize]) -> Result<Self> {
        let mut sub = self.p.select(states);
        let sums = sub.row_sums();
        if let Some(row) = sums.iter().position(|&s| s <= 0.0) {
            return Err(KemenyError::ZeroDegree(states[row]));
        }
        scale_rows(&mut sub, &sums);
        Ok(Self { p: sub })
    }

    pub fn blocks(&self, split: BlockPartition) -> Result<Blocks> {
        split.check(self.dim())?;
        let (r1, r2) = (split.first(), split.second());
        Ok(Blocks {
            p11: SubStochasticBlock(self.p.submatrix(r1.clone(), r1.clone())),
            p12: self.p.submatrix(r1.clone(), r2.clone()),
            p21: self.p.submatrix(r2.clone(), r1),
            p22: SubStochasticBlock(self.p.submatrix(r2.clone(), r2)),
        })
    }

    /// Constant row sum of the block `rows × rows`, if all rows agree within `tol`.
    pub fn block_row_sum(&self, rows: Range<usize>, tol: f64) -> Option<f64> {
        let blk = self.p.submatrix(rows.clone(), rows);
        let sums = blk.row_sums();
        let r = sums[0];
        sums.iter().all(|s| (s - r).abs() <= tol).then_some(r)
    }
}

fn renormalize_rows(p: &mut CsrMatrix) {
    let sums = p.row_sums();
    scale_rows(p, &sums);
}

fn scale_rows(p: &mut CsrMatrix, sums: &[f64]) {
    let indptr = p.indptr().to_vec();
    let vals = p.values_mut();
    for (i, &s) in sums.iter().enumerate() {
        if s > 0.0 && s != 1.0 {
            vals[indptr[i]..indptr[i + 1]].iter_mut().for_each(|v| *v /= s);
        }
    }
}

/// Nonnegative block with row sums at most one, such as a diagonal block of
/// a stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SubStochasticBlock(CsrMatrix);

impl SubStochasticBlock {
    pub fn new(m: CsrMatrix) -> Result<Self> {
        if let Some((row, col, value)) = m.iter().find(|e| e.2 < 0.0) {
            return Err(KemenyError::NegativeEntry { row, col, value });
        }
        if let Some((row, &sum)) = m.row_sums().iter().enumerate().find(|(_, &s)| s > 1.0 + ROW_SUM_TOL) {
            return Err(KemenyError::NotStochastic { row, sum });
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn identity_minus(&self) -> CsrMatrix {
        self.0.identity_minus()
    }
}

/// The four blocks of a 2×2 partition.
#[derive(Clone, Debug)]
pub struct Blocks {
    pub p11: SubStochasticBlock,
    pub p12: CsrMatrix,
    pub p21: CsrMatrix,
    pub p22: SubStochasticBlock,
}

/// Split `{0..m} | {m..n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    m: usize,
    n: usize,
}

impl BlockPartition {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || m >= n {
            return Err(KemenyError::InvalidInput(format!("split {m} of {n} leaves an empty block")));
        }
        Ok(Self { m, n })
    }

    /// `m = ⌊n/2⌋`.
    pub fn halving(n: usize) -> Result<Self> {
        Self::new(n / 2, n)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn first(&self) -> Range<usize> {
        0..self.m
    }

    pub fn second(&self) -> Range<usize> {
        self.m..self.n
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.n {
            return Err(KemenyError::DimensionMismatch(format!("split for n={} applied to n={n}", self.n)));
        }
        Ok(())
    }
}

/// Strongly-connected-component certificate.
#[derive(Clone, Debug)]
pub struct IrreducibilityReport {
    pub irreducible: bool,
    pub components: usize,
    /// Component id of every state.
    pub component_of: Vec<usize>,
}

impl IrreducibilityReport {
    /// States of the largest strongly connected component, in index order.
    pub fn largest_component(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.components];
        self.component_of.iter().for_each(|&c| sizes[c] += 1);
        let best = (0..self.components).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap_or(0);
        (0..self.component_of.len()).filter(|&i| self.component_of[i] == best).collect()
    }
}

/// Tarjan's algorithm on the sparsity digraph (iterative).
pub fn check_irreducible(p: &CsrMatrix) -> IrreducibilityReport {
    let n = p.nrows();
    const NONE: usize = usize::MAX;
    let mut index = vec![NONE; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![NONE; n];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next_index = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != NONE {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut edge)) = call.last_mut() {
            let succ = p.row(v).0;
            if *edge < succ.len() {
                let w = succ[*edge];
                *edge += 1;
                if index[w] == NONE {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    IrreducibilityReport { irreducible: ncomp <= 1, components: ncomp, component_of: comp }
}

pub(crate) fn require_irreducible(p: &StochasticMatrix) -> Result<()> {
    let report = p.check_irreducible();
    if report.irreducible {
        Ok(())
    } else {
        Err(KemenyError::Reducible { components: report.components })
    }
}

/// Positive probability vector with `πᵀP = πᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    /// Checks positivity and rescales to unit 1-norm.
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        if pi.is_empty() {
            return Err(KemenyError::InvalidInput("empty distribution".into()));
        }
        if let Some(i) = pi.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(KemenyError::InvalidInput(format!("component {i} of π is {}", pi[i])));
        }
        let s: f64 = pi.iter().sum();
        Ok(Self { pi: pi.into_iter().map(|v| v / s).collect() })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// ‖πᵀP − πᵀ‖₁.
    pub fn residual(&self, p: &StochasticMatrix) -> f64 {
        let y = p.matrix().mul_vec_transpose(&self.pi);
        y.iter().zip(&self.pi).map(|(a, b)| (a - b).abs()).sum()
    }

    /// Normalized restriction to `range` together with its mass.
    pub fn restrict(&self, range: Range<usize>) -> (StationaryDistribution, f64) {
        let part = &self.pi[range];
        let mass: f64 = part.iter().sum();
        (Self { pi: part.iter().map(|v| v / mass).collect() }, mass)
    }

    pub fn permute(&self, perm: &[usize]) -> Self {
        Self { pi: perm.iter().map(|&i| self.pi[i]).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StationaryMethod {
    /// Direct solve for n ≤ 50 000, power iteration above.
    #[default]
    Auto,
    DirectNullSpace,
    PowerIteration,
}

pub fn stationary(p: &StochasticMatrix, method: StationaryMethod, tol: f64) -> Result<StationaryDistribution> {
    let n = p.dim();
    let method = match method {
        StationaryMethod::Auto if n <= DIRECT_STATIONARY_MAX => StationaryMethod::DirectNullSpace,
        StationaryMethod::Auto => StationaryMethod::PowerIteration,
        m => m,
    };
    let pi = match method {
        StationaryMethod::PowerIteration => power_iteration(p, tol, 200_000)?,
        _ => null_space(p)?,
    };
    let dist = StationaryDistribution::new(pi)?;
    let residual = dist.residual(p);
    if residual > tol {
        return Err(KemenyError::NotConverged { method: "stationary solve", iterations: 1, residual });
    }
    Ok(dist)
}

pub fn stationary_default(p: &StochasticMatrix) -> Result<StationaryDistribution> {
    stationary(p, StationaryMethod::Auto, STATIONARY_TOL)
}

/// Grounds the last state: `(I − P̃)ᵀ x = P[n−1, :n−1]ᵀ` with `π_{n−1} = 1`.
fn null_space(p: &StochasticMatrix) -> Result<Vec<f64>> {
    let n = p.dim();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let k = n - 1;
    let a = p.matrix().submatrix(0..k, 0..k).identity_minus();
    let lu = SparseLu::factor_ordered(&a, &fill_reducing_order(&a))?;
    let mut rhs = vec![0.0; k];
    let (cols, vals) = p.matrix().row(k);
    for (&j, &v) in cols.iter().zip(vals) {
        if j < k {
            rhs[j] = v;
        }
    }
    let mut x = lu.solve_transpose(&rhs);
    x.push(1.0);
    Ok(x)
}

fn power_iteration(p: &StochasticMatrix, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = p.dim();
    let mut x = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let y = p.matrix().mul_vec_transpose(&x);
        residual = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        if residual <= 0.5 * tol {
            return Ok(x);
        }
        // Lazy step handles periodic chains.
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = 0.5 * (*xi + yi);
        }
        let s: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= s);
    }
    Err(KemenyError::NotConverged { method: "power iteration", iterations: max_iter, residual })
}

/// Stochastic complements with censored stationary vectors and masses;
/// `theta` and `gamma` are filled by the divide-and-conquer code.
#[derive(Clone, Debug)]
pub struct CensoredPair {
    pub p1: StochasticMatrix,
    pub p2: StochasticMatrix,
    pub pihat1: StationaryDistribution,
    pub pihat2: StationaryDistribution,
    pub alpha1: f64,
    pub alpha2: f64,
    pub theta: Option<f64>,
    pub gamma: Option<f64>,
}

impl CensoredPair {
    /// Fills θ and γ = α₁θ − α₂.
    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = Some(theta);
        self.gamma = Some(self.alpha1 * theta - self.alpha2);
        self
    }
}

/// The two diagonal-block factorizations a split needs.
pub(crate) struct SplitSystem {
    pub p11: CsrMatrix,
    pub p12: CsrMatrix,
    pub p21: CsrMatrix,
    pub p22: CsrMatrix,
    pub lu11: SparseLu,
    pub lu22: SparseLu,
}

impl SplitSystem {
    pub fn new(p: &CsrMatrix, m: usize) -> Result<Self> {
        let n = p.nrows();
        let p11 = p.submatrix(0..m, 0..m);
        let p22 = p.submatrix(m..n, m..n);
        let a11 = p11.identity_minus();
        let a22 = p22.identity_minus();
        let (lu11, lu22) = rayon::join(
            || SparseLu::factor_ordered(&a11, &fill_reducing_order(&a11)),
            || SparseLu::factor_ordered(&a22, &fill_reducing_order(&a22)),
        );
        Ok(Self {
            p12: p.submatrix(0..m, m..n),
            p21: p.submatrix(m..n, 0..m),
            p11,
            p22,
            lu11: lu11?,
            lu22: lu22?,
        })
    }

    /// P₁₁ + P₁₂(I − P₂₂)⁻¹P₂₁
    pub fn complement1(&self, drop_tol: f64) -> CsrMatrix {
        schur_update(&self.p11, &self.p12, &self.p21, &self.lu22, drop_tol)
    }

    /// P₂₂ + P₂₁(I − P₁₁)⁻¹P₁₂
    pub fn complement2(&self, drop_tol: f64) -> CsrMatrix {
        schur_update(&self.p22, &self.p21, &self.p12, &self.lu11, drop_tol)
    }
}

/// `pii + pij · lu⁻¹ · pji`, one solve per nonzero column of `pji`.
fn schur_update(pii: &CsrMatrix, pij: &CsrMatrix, pji: &CsrMatrix, lu: &SparseLu, drop_tol: f64) -> CsrMatrix {
    let k = pji.nrows();
    let cols = pji.transpose();
    let rows: Vec<usize> = (0..pij.nrows()).filter(|&i| !pij.row(i).0.is_empty()).collect();
    let nonzero_cols: Vec<usize> = (0..cols.nrows()).filter(|&c| !cols.row(c).0.is_empty()).collect();
    let updates: Vec<Vec<(usize, usize, f64)>> = nonzero_cols
        .par_iter()
        .map(|&c| {
            let mut rhs = vec![0.0; k];
            let (ri, rv) = cols.row(c);
            for (&i, &v) in ri.iter().zip(rv) {
                rhs[i] = v;
            }
            let w = lu.solve(&rhs);
            rows.iter()
                .filter_map(|&r| {
                    let (ci, cv) = pij.row(r);
                    let v: f64 = ci.iter().zip(cv).map(|(&j, &a)| a * w[j]).sum();
                    (v != 0.0 && v.abs() > drop_tol).then_some((r, c, v))
                })
                .collect()
        })
        .collect();
    let mut triplets: Vec<(usize, usize, f64)> = pii.iter().collect();
    triplets.extend(updates.into_iter().flatten());
    CsrMatrix::from_triplets(pii.nrows(), pii.ncols(), &triplets).expect("in range")
}

pub fn stochastic_complements(
    p: &StochasticMatrix,
    split: BlockPartition,
    pi: &StationaryDistribution,
) -> Result<CensoredPair> {
    split.check(p.dim())?;
    let sys = SplitSystem::new(p.matrix(), split.m())?;
    let (p1, p2) = (sys.complement1(0.0), sys.complement2(0.0));
    let (pihat1, alpha1) = pi.restrict(split.first());
    let (pihat2, alpha2) = pi.restrict(split.second());
    let pair = CensoredPair {
        p1: StochasticMatrix::from_trusted(p1),
        p2: StochasticMatrix::from_trusted(p2),
        pihat1,
        pihat2,
        alpha1,
        alpha2,
        theta: None,
        gamma: None,
    };
    if cfg!(debug_assertions) {
        debug_assert!(pair.p1.check_irreducible().irreducible);
        debug_assert!(pair.p2.check_irreducible().irreducible);
    }
    Ok(pair)
}

/// 2×2 block-to-block transition masses.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregatedMatrix {
    pub s: [[f64; 2]; 2],
}

impl AggregatedMatrix {
    /// Stationary vector (α₁, α₂) of S.
    pub fn stationary(&self) -> [f64; 2] {
        let (a, b) = (self.s[0][1], self.s[1][0]);
        if a + b == 0.0 {
            return [0.5, 0.5];
        }
        [b / (a + b), a / (a + b)]
    }
}

pub fn aggregated(
    p: &StochasticMatrix,
    split: BlockPartition,
    pihat1: &StationaryDistribution,
    pihat2: &StationaryDistribution,
) -> Result<AggregatedMatrix> {
    let b = p.blocks(split)?;
    let mass = |blk: &CsrMatrix, w: &StationaryDistribution| dot(w.as_slice(), &blk.row_sums());
    Ok(AggregatedMatrix {
        s: [
            [mass(b.p11.matrix(), pihat1), mass(&b.p12, pihat1)],
            [mass(&b.p21, pihat2), mass(b.p22.matrix(), pihat2)],
        ],
    })
}

/// Solves `(I − P + 𝟙πᵀ) y = b` and its transpose for a stochastic
/// irreducible P with stationary vector π, through one sparse LU of the
/// grounded matrix `(I − P)` with the last row and column removed.
pub struct DeflatedSolver {
    lu: Option<SparseLu>,
    pi: Vec<f64>,
}

impl DeflatedSolver {
    pub fn new(p: &CsrMatrix, pi: &[f64]) -> Result<Self> {
        let n = p.nrows();
        if n == 1 {
            return Ok(Self { lu: None, pi: pi.to_vec() });
        }
        let a = p.submatrix(0..n - 1, 0..n - 1).identity_minus();
        let lu = SparseLu::factor_ordered(&a, &fill_reducing_order(&a))?;
        Ok(Self { lu: Some(lu), pi: pi.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let s = dot(&self.pi, b);
        let Some(lu) = &self.lu else { return b.to_vec() };
        let n = b.len();
        let r: Vec<f64> = b[..n - 1].iter().map(|v| v - s).collect();
        let mut w = lu.solve(&r);
        w.push(0.0);
        let t = s - dot(&self.pi, &w);
        w.iter_mut().for_each(|v| *v += t);
        w
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let s: f64 = b.iter().sum();
        let Some(lu) = &self.lu else { return b.to_vec() };
        let n = b.len();
        let r: Vec<f64> = (0..n - 1).map(|i| b[i] - s * self.pi[i]).collect();
        let mut w = lu.solve_transpose(&r);
        w.push(0.0);
        let t = s - w.iter().sum::<f64>();
        w.iter_mut().zip(&self.pi).for_each(|(v, p)| *v += t * p);
        w
    }
}

/// How a graph adjacency matrix becomes a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GraphNormalization {
    /// `D⁻¹A`
    #[default]
    Row,
    /// `D^{-1/2} Â D^{-1/2}` on the 0/1 pattern Â of a symmetric A.
    Symmetric,
}

/// Symmetric normalization of an undirected graph. `N` is similar to the
/// random walk `D⁻¹Â`, so both share eigenvalues and Kemeny's constant;
/// `q = √d / ‖√d‖` is the unit Perron vector of `N`.
#[derive(Clone, Debug)]
pub struct SymmetricWalk {
    pub n_matrix: CsrMatrix,
    pub degrees: Vec<f64>,
    pub q: Vec<f64>,
}

impl SymmetricWalk {
    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    /// Symmetrization `Π^{1/2} P Π^{-1/2}` of a reversible chain, with π
    /// in place of the degrees. Non-reversible chains are refused.
    pub fn from_reversible(p: &StochasticMatrix) -> Result<Self> {
        let pi = stationary_default(p)?;
        let sq: Vec<f64> = pi.as_slice().iter().map(|v| v.sqrt()).collect();
        let t: Vec<_> = p.matrix().iter().map(|(i, j, v)| (i, j, v * sq[i] / sq[j])).collect();
        let n_matrix = CsrMatrix::from_triplets(p.dim(), p.dim(), &t)?;
        let scale = n_matrix.iter().map(|e| e.2.abs()).fold(0.0, f64::max);
        if !n_matrix.is_symmetric(1e-10 * scale.max(1.0)) {
            return Err(KemenyError::Precondition(
                "chain is not reversible, so its deflated resolvent is not symmetric; use dnc".into(),
            ));
        }
        Ok(Self { n_matrix, degrees: pi.as_slice().to_vec(), q: sq })
    }

    /// The similar random walk `D⁻¹Â`.
    pub fn random_walk(&self) -> StochasticMatrix {
        let sq: Vec<f64> = self.degrees.iter().map(|d| d.sqrt()).collect();
        let t: Vec<_> = self.n_matrix.iter().map(|(i, j, v)| (i, j, v * sq[j] / sq[i])).collect();
        let p = CsrMatrix::from_triplets(self.dim(), self.dim(), &t).expect("in range");
        StochasticMatrix::from_trusted(p)
    }
}

#[derive(Clone, Debug)]
pub enum GraphChain {
    RandomWalk(StochasticMatrix),
    Symmetric(SymmetricWalk),
}

pub fn build_from_graph(adjacency: &CsrMatrix, mode: GraphNormalization) -> Result<GraphChain> {
    match mode {
        GraphNormalization::Row => random_walk(adjacency).map(GraphChain::RandomWalk),
        GraphNormalization::Symmetric => symmetric_walk(adjacency).map(GraphChain::Symmetric),
    }
}

/// `D⁻¹A` with `D = diag(A𝟙)`.
pub fn random_walk(adjacency: &CsrMatrix) -> Result<StochasticMatrix> {
    if !adjacency.is_square() {
        return Err(KemenyError::DimensionMismatch("adjacency matrix must be square".into()));
    }
    if let Some((row, col, value)) = adjacency.iter().find(|e| e.2 < 0.0) {
        return Err(KemenyError::NegativeEntry { row, col, value });
    }
    let mut a = adjacency.prune(0.0);
    let d = a.row_sums();
    if let Some(i) = d.iter().position(|&v| v <= 0.0) {
        return Err(KemenyError::ZeroDegree(i));
    }
    scale_rows(&mut a, &d);
    Ok(StochasticMatrix { p: a })
}

/// `D^{-1/2} Â D^{-1/2}` where Â is the 0/1 pattern of a symmetric adjacency.
pub fn symmetric_walk(adjacency: &CsrMatrix) -> Result<SymmetricWalk> {
    let pattern = adjacency.prune(0.0);
    if !pattern.is_structurally_symmetric() {
        return Err(KemenyError::InvalidInput("symmetric normalization needs a symmetric adjacency pattern".into()));
    }
    let n = pattern.nrows();
    let degrees: Vec<f64> = (0..n).map(|i| pattern.row(i).0.len() as f64).collect();
    if let Some(i) = degrees.iter().position(|&d| d == 0.0) {
        return Err(KemenyError::ZeroDegree(i));
    }
    let sq: Vec<f64> = degrees.iter().map(|d| d.sqrt()).collect();
    let t: Vec<_> = pattern.iter().map(|(i, j, _)| (i, j, 1.0 / (sq[i] * sq[j]))).collect();
    let n_matrix = CsrMatrix::from_triplets(n, n, &t)?;
    let norm = sq.iter().map(|s| s * s).sum::<f64>().sqrt();
    let q = sq.iter().map(|s| s / norm).collect();
    Ok(SymmetricWalk { n_matrix, degrees, q })
}
