//! Closed forms for periodic, bipartite, Kronecker-product and
//! constant-row-sum chains.

use std::time::Instant;

use nalgebra::DMatrix;

use crate::direct::{kemeny_direct, N_DENSE};
use crate::dnc::{kemeny_dnc_auto, theta_via_solves, DncConfig, ThetaSolver};
use crate::error::{KemenyError, Result};
use crate::linalg::{dense, CsrMatrix};
use crate::markov::{
    check_irreducible, require_irreducible, stationary_default, stochastic_complements, BlockPartition,
    StochasticMatrix,
};
use crate::result::{KemenyResult, Method};

/// Block-cyclic chain with classes `0..d`. Block `blocks[k]` holds the
/// transitions from class `(k+1) mod d` to class `k`, so it has
/// `n_{k+1}` rows and `n_k` columns, and the assembled matrix has
/// `blocks[d−1]` in the top-right corner and the others below the diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicChain {
    blocks: Vec<CsrMatrix>,
}

impl PeriodicChain {
    pub fn new(blocks: Vec<CsrMatrix>) -> Result<Self> {
        let d = blocks.len();
        if d < 2 {
            return Err(KemenyError::InvalidInput(format!("period must be at least 2, got {d}")));
        }
        for k in 0..d {
            let next = &blocks[(k + 1) % d];
            if blocks[k].nrows() != next.ncols() {
                return Err(KemenyError::DimensionMismatch(format!(
                    "block {k} has {} rows but class {} has {} states",
                    blocks[k].nrows(),
                    (k + 1) % d,
                    next.ncols()
                )));
            }
            if let Some((row, col, value)) = blocks[k].iter().find(|e| e.2 < 0.0) {
                return Err(KemenyError::NegativeEntry { row, col, value });
            }
            if let Some((row, &sum)) =
                blocks[k].row_sums().iter().enumerate().find(|(_, s)| (**s - 1.0).abs() > 1e-10)
            {
                return Err(KemenyError::NotStochastic { row, sum });
            }
        }
        Ok(Self { blocks })
    }

    pub fn from_dense(blocks: &[DMatrix<f64>]) -> Result<Self> {
        Self::new(blocks.iter().map(|b| CsrMatrix::from_dense(b, 0.0)).collect())
    }

    pub fn period(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[CsrMatrix] {
        &self.blocks
    }

    /// Class sizes n₀, …, n_{d−1}.
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.ncols()).collect()
    }

    pub fn dim(&self) -> usize {
        self.sizes().iter().sum()
    }

    /// `blocks[d−1] ⋯ blocks[0]`: the d-step chain watched on class 0.
    pub fn product(&self) -> CsrMatrix {
        self.shifted_product(0)
    }

    /// d-step chain watched on class `j`.
    pub fn shifted_product(&self, j: usize) -> CsrMatrix {
        let d = self.period();
        let mut acc = self.blocks[j % d].clone();
        for s in 1..d {
            acc = self.blocks[(j + s) % d].matmul(&acc).expect("dimensions checked");
        }
        acc
    }
}

pub fn assemble_periodic(chain: &PeriodicChain) -> Result<StochasticMatrix> {
    let sizes = chain.sizes();
    let d = sizes.len();
    let mut offset = vec![0; d + 1];
    for k in 0..d {
        offset[k + 1] = offset[k] + sizes[k];
    }
    let n = offset[d];
    let mut t = Vec::new();
    for (k, b) in chain.blocks.iter().enumerate() {
        let (r0, c0) = (offset[(k + 1) % d], offset[k]);
        t.extend(b.iter().map(|(i, j, v)| (r0 + i, c0 + j, v)));
    }
    StochasticMatrix::new(CsrMatrix::from_triplets(n, n, &t)?)
}

fn kemeny_of(p: &StochasticMatrix) -> Result<f64> {
    if p.dim() <= N_DENSE {
        Ok(kemeny_direct(p)?.kappa)
    } else {
        Ok(kemeny_dnc_auto(p, &DncConfig::default())?.kappa)
    }
}

/// κ(P) = d·κ(A_d⋯A₁) + n − d·n₁ + (d − 1)/2.
pub fn kemeny_periodic(chain: &PeriodicChain) -> Result<KemenyResult> {
    let start = Instant::now();
    let d = chain.period() as f64;
    let n = chain.dim();
    let n1 = chain.sizes()[0] as f64;
    let prod = StochasticMatrix::from_trusted(chain.product());
    require_irreducible(&prod)?;
    let k1 = kemeny_of(&prod)?;
    let kappa = d * k1 + n as f64 - d * n1 + (d - 1.0) / 2.0;
    let nnz = chain.blocks.iter().map(|b| b.nnz()).sum();
    let mut r = KemenyResult::new(kappa, Method::ClosedForm, n, nnz);
    r.diagnostics.formula = Some(if chain.period() == 2 { "bipartite" } else { "periodic" }.into());
    r.diagnostics.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

/// The pieces of κ(P) = κ(P₁) + κ(P₂) + γ for the split after class 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PeriodicDecomposition {
    pub kappa: f64,
    pub kappa_p1: f64,
    pub kappa_p2: f64,
    /// γ from the θ solves.
    pub gamma: f64,
}

impl PeriodicDecomposition {
    /// κ(P) − κ(P₁) − κ(P₂), to compare with γ.
    pub fn gamma_from_difference(&self) -> f64 {
        self.kappa - self.kappa_p1 - self.kappa_p2
    }
}

pub fn kemeny_periodic_decomposition_check(chain: &PeriodicChain) -> Result<PeriodicDecomposition> {
    let p = assemble_periodic(chain)?;
    let split = BlockPartition::new(chain.sizes()[0], p.dim())?;
    let pi = stationary_default(&p)?;
    let pair = stochastic_complements(&p, split, &pi)?;
    let tg = theta_via_solves(&p, split, &pair.pihat1, &pair.pihat2, ThetaSolver::SparseLu, 1e-12)?;
    Ok(PeriodicDecomposition {
        kappa: kemeny_of(&p)?,
        kappa_p1: kemeny_of(&pair.p1)?,
        kappa_p2: kemeny_of(&pair.p2)?,
        gamma: tg.gamma,
    })
}

/// Closed-form correction for A ⊗ B split after the first row block of A:
/// γ = (e₁ᵀ(I − A + 𝟙xᵀ)⁻¹e₁ − x₁)/(1 − x₁), x the stationary vector of A.
pub fn kronecker_gamma(a: &StochasticMatrix) -> Result<f64> {
    let n = a.dim();
    if n < 2 {
        return Err(KemenyError::Precondition("A must have at least two states".into()));
    }
    let x = stationary_default(a)?;
    let xv = nalgebra::DVector::from_column_slice(x.as_slice());
    let m = DMatrix::identity(n, n) - a.to_dense() + dense::ones(n) * xv.transpose();
    let mut e1 = nalgebra::DVector::zeros(n);
    e1[0] = 1.0;
    let z = dense::solve(&m, &e1)?;
    let x1 = x.as_slice()[0];
    Ok((z[0] - x1) / (1.0 - x1))
}

/// κ(A ⊗ B) = κ(P₁) + κ(P₂) + γ with the closed-form γ.
pub fn kemeny_kronecker(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<KemenyResult> {
    let start = Instant::now();
    require_irreducible(a)?;
    require_irreducible(b)?;
    let kron = a.matrix().kron(b.matrix());
    let report = check_irreducible(&kron);
    if !report.irreducible {
        return Err(KemenyError::Reducible { components: report.components });
    }
    let p = StochasticMatrix::from_trusted(kron);
    let n = p.dim();
    let kappa = if a.dim() == 1 {
        kemeny_of(b)?
    } else {
        let split = BlockPartition::new(b.dim(), n)?;
        let pi = stationary_default(&p)?;
        let pair = stochastic_complements(&p, split, &pi)?;
        kemeny_of(&pair.p1)? + kemeny_of(&pair.p2)? + kronecker_gamma(a)?
    };
    let mut r = KemenyResult::new(kappa, Method::ClosedForm, n, p.nnz());
    r.diagnostics.formula = Some("kronecker".into());
    r.diagnostics.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

/// κ plus the closed-form block masses.
#[derive(Clone, Debug, PartialEq)]
pub struct RowSumResult {
    pub result: KemenyResult,
    pub r1: f64,
    pub r2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

/// Tolerance on the constant-row-sum test.
pub const ROWSUM_TOL: f64 = 1e-10;

/// κ(P) = κ(P₁) + κ(P₂) + 1/(2 − r₁ − r₂) when P₁₁𝟙 = r₁𝟙 and P₂₂𝟙 = r₂𝟙.
pub fn kemeny_constant_rowsum(p: &StochasticMatrix, split: BlockPartition) -> Result<RowSumResult> {
    let start = Instant::now();
    let (r1, r2) = constant_rowsums(p, split)
        .ok_or_else(|| KemenyError::Precondition("diagonal blocks do not have constant row sums below 1".into()))?;
    require_irreducible(p)?;
    let pi = stationary_default(p)?;
    let pair = stochastic_complements(p, split, &pi)?;
    let kappa = kemeny_of(&pair.p1)? + kemeny_of(&pair.p2)? + 1.0 / (2.0 - r1 - r2);
    let alpha1 = (1.0 - r2) / (2.0 - r1 - r2);
    let mut result = KemenyResult::new(kappa, Method::ClosedForm, p.dim(), p.nnz());
    result.diagnostics.formula = Some("constant-row-sum".into());
    result.diagnostics.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(RowSumResult { result, r1, r2, alpha1, alpha2: 1.0 - alpha1 })
}

/// (r₁, r₂) if both diagonal blocks have constant row sums in [0, 1).
pub fn constant_rowsums(p: &StochasticMatrix, split: BlockPartition) -> Option<(f64, f64)> {
    if split.n() != p.dim() {
        return None;
    }
    let r1 = p.block_row_sum(split.first(), ROWSUM_TOL)?;
    let r2 = p.block_row_sum(split.second(), ROWSUM_TOL)?;
    (r1 < 1.0 && r2 < 1.0).then_some((r1, r2))
}

/// Periodic chain attaining κ = n − (d·n₁ + 1)/2, the smallest value over
/// all chains with these class sizes. Each class is cut into n₁ contiguous,
/// balanced groups; class 0 into singletons.
pub fn extremal_periodic(sizes: &[usize]) -> Result<PeriodicChain> {
    let d = sizes.len();
    if d < 2 {
        return Err(KemenyError::InvalidInput("need at least two classes".into()));
    }
    let n1 = sizes[0];
    if n1 == 0 || sizes.iter().any(|&s| s < n1) {
        return Err(KemenyError::Precondition("class 0 must be nonempty and no larger than the others".into()));
    }
    let groups: Vec<Vec<std::ops::Range<usize>>> = sizes.iter().map(|&s| balanced_groups(s, n1)).collect();
    let uniform_into = |from: &[std::ops::Range<usize>], to: &[std::ops::Range<usize>], rows, cols| {
        let mut t = Vec::new();
        for (src, dst) in from.iter().zip(to) {
            let w = 1.0 / dst.len() as f64;
            for x in src.clone() {
                t.extend(dst.clone().map(|y| (x, y, w)));
            }
        }
        CsrMatrix::from_triplets(rows, cols, &t).expect("in range")
    };
    let mut blocks = Vec::with_capacity(d);
    // Class 1 → class 0: group ℓ to the single state of group ℓ−1 (cyclically).
    let t: Vec<_> = (0..n1)
        .flat_map(|l| {
            let target = (l + n1 - 1) % n1;
            groups[1][l].clone().map(move |x| (x, target, 1.0))
        })
        .collect();
    blocks.push(CsrMatrix::from_triplets(sizes[1], n1, &t)?);
    // Class j → class j−1 for j ≥ 2, group to group.
    for j in 2..d {
        blocks.push(uniform_into(&groups[j], &groups[j - 1], sizes[j], sizes[j - 1]));
    }
    // Class 0 → class d−1, group to group.
    blocks.push(uniform_into(&groups[0], &groups[d - 1], n1, sizes[d - 1]));
    PeriodicChain::new(blocks)
}

/// Extremal value n − (d·n₁ + 1)/2.
pub fn extremal_value(sizes: &[usize]) -> f64 {
    let n: usize = sizes.iter().sum();
    n as f64 - (sizes.len() as f64 * sizes[0] as f64 + 1.0) / 2.0
}

fn balanced_groups(size: usize, parts: usize) -> Vec<std::ops::Range<usize>> {
    let (q, r) = (size / parts, size % parts);
    let mut start = 0;
    (0..parts)
        .map(|l| {
            let len = q + usize::from(l < r);
            let g = start..start + len;
            start += len;
            g
        })
        .collect()
}

/// Period of an irreducible chain: gcd of `level(u) + 1 − level(v)` over
/// all edges u → v, with BFS levels from state 0.
pub fn period(p: &StochasticMatrix) -> usize {
    let levels = bfs_levels(p.matrix());
    let mut g = 0usize;
    for (u, v, _) in p.matrix().iter() {
        let diff = (levels[u] as i64 + 1 - levels[v] as i64).unsigned_abs() as usize;
        g = gcd(g, diff);
    }
    g.max(1)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn bfs_levels(p: &CsrMatrix) -> Vec<usize> {
    let n = p.nrows();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &v in p.row(u).0 {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    level
}

/// Cyclic classes of a periodic irreducible chain: the block-cyclic form
/// and the permutation (new position → original state) that produces it.
pub fn detect_periodic(p: &StochasticMatrix) -> Option<(PeriodicChain, Vec<usize>)> {
    if p.dim() < 2 || !p.check_irreducible().irreducible {
        return None;
    }
    let d = period(p);
    if d < 2 {
        return None;
    }
    let levels = bfs_levels(p.matrix());
    // Edges go from class k to class k − 1.
    let class = |s: usize| (d - levels[s] % d) % d;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); d];
    for s in 0..p.dim() {
        members[class(s)].push(s);
    }
    let perm: Vec<usize> = members.iter().flatten().copied().collect();
    let mut pos = vec![0; p.dim()];
    for c in &members {
        for (k, &s) in c.iter().enumerate() {
            pos[s] = k;
        }
    }
    let mut triplets: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); d];
    for (u, v, w) in p.matrix().iter() {
        triplets[class(v)].push((pos[u], pos[v], w));
    }
    let blocks = (0..d)
        .map(|k| CsrMatrix::from_triplets(members[(k + 1) % d].len(), members[k].len(), &triplets[k]))
        .collect::<Result<Vec<_>>>()
        .ok()?;
    PeriodicChain::new(blocks).ok().map(|c| (c, perm))
}
