//! Divide and conquer through stochastic complements.
//!
//! For a split `{0..m} | {m..n}` with complements P₁, P₂ and block masses
//! α₁, α₂, κ(P) = κ(P₁) + κ(P₂) + γ where γ = α₁θ − α₂. Each level needs one
//! sparse LU per diagonal block (reused for every complement column and for
//! the θ solves) and one solve with the deflated matrix I − P₁ + 𝟙π̂₁ᵀ.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::direct::{kemeny_dense, N_DENSE};
use crate::error::{KemenyError, Result};
use crate::linalg::dense;
use crate::linalg::krylov::{bicgstab, gmres, IdentityPreconditioner, KrylovOptions, LinearOperator, Preconditioner};
use crate::linalg::ordering::{bisect, LevelSetPartitioner};
use crate::linalg::sparse::{dot, norm2, CsrMatrix};
use crate::linalg::Ilu0;
use crate::markov::{
    aggregated, check_irreducible, require_irreducible, stationary_default, BlockPartition, DeflatedSolver,
    SplitSystem, StationaryDistribution, StochasticMatrix,
};
use crate::result::{KemenyResult, Method};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitStrategy {
    /// m = ⌊n/2⌋
    #[default]
    Halving,
    /// Separator-guided split with the fewest coupling entries.
    NestedDissection,
}

/// How the deflated system for θ is solved. The diagonal-block LU
/// factorizations are computed for the complements in every mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaSolver {
    #[default]
    SparseLu,
    Gmres,
    Bicgstab,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DncConfig {
    /// Chains with fewer states are handled densely.
    pub n0: usize,
    pub split: SplitStrategy,
    pub solver: ThetaSolver,
    /// Krylov tolerance for the θ solve.
    pub tol: f64,
    pub max_depth: usize,
    /// Complement entries with magnitude at or below this are dropped.
    pub drop_tol: f64,
    /// Largest leaf that may be solved densely once `max_depth` is hit.
    pub n_dense: usize,
}

impl Default for DncConfig {
    fn default() -> Self {
        Self {
            n0: 512,
            split: SplitStrategy::Halving,
            solver: ThetaSolver::SparseLu,
            tol: 1e-8,
            max_depth: 64,
            drop_tol: 0.0,
            n_dense: N_DENSE,
        }
    }
}

impl DncConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n0 < 2 {
            return Err(KemenyError::InvalidInput(format!("n0 must be at least 2, got {}", self.n0)));
        }
        if !(self.tol > 0.0) {
            return Err(KemenyError::InvalidInput(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaExpression {
    Theta2,
    Theta3,
    Theta4,
    Theta5,
    GammaResolvent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaGamma {
    pub theta: f64,
    pub gamma: f64,
    pub expression_used: ThetaExpression,
}

#[derive(Clone, Copy, Debug, Default)]
struct Stats {
    depth: usize,
    leaves: usize,
    krylov_iterations: usize,
    fallbacks: usize,
    max_residual: f64,
}

impl Stats {
    fn leaf(depth: usize) -> Self {
        Self { depth, leaves: 1, ..Default::default() }
    }

    fn merge(self, other: Stats) -> Self {
        Self {
            depth: self.depth.max(other.depth),
            leaves: self.leaves + other.leaves,
            krylov_iterations: self.krylov_iterations + other.krylov_iterations,
            fallbacks: self.fallbacks + other.fallbacks,
            max_residual: self.max_residual.max(other.max_residual),
        }
    }
}

/// `I − P + 𝟙π̂ᵀ` as an operator.
struct DeflatedOperator<'a> {
    p: &'a CsrMatrix,
    pihat: &'a [f64],
}

impl LinearOperator for DeflatedOperator<'_> {
    fn dim(&self) -> usize {
        self.p.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.p.matvec(x, y);
        let s = dot(self.pihat, x);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi - *yi + s;
        }
    }
}

enum DeflatedPreconditioner {
    Ilu(Ilu0),
    Identity,
}

impl Preconditioner for DeflatedPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Self::Ilu(f) => f.apply(r, z),
            Self::Identity => IdentityPreconditioner.apply(r, z),
        }
    }
}

/// ILU(0) of `I − P₁₁ − P₁₂ diag(I − P₂₂)⁻¹ P₂₁`, a sparse stand-in for I − P₁.
fn approximate_complement_ilu(sys: &SplitSystem) -> DeflatedPreconditioner {
    let d: Vec<f64> = sys.p22.diagonal().iter().map(|v| 1.0 / (1.0 - v)).collect();
    let t: Vec<_> = sys.p21.iter().map(|(i, j, v)| (i, j, v * d[i])).collect();
    let scaled = CsrMatrix::from_triplets(sys.p21.nrows(), sys.p21.ncols(), &t).expect("in range");
    let approx = sys
        .p12
        .matmul(&scaled)
        .and_then(|c| sys.p11.add_scaled(1.0, &c, 1.0))
        .map(|a| a.identity_minus());
    match approx.and_then(|a| Ilu0::factor(&a)) {
        Ok(f) => DeflatedPreconditioner::Ilu(f),
        Err(_) => match Ilu0::factor(&sys.p11.identity_minus()) {
            Ok(f) => DeflatedPreconditioner::Ilu(f),
            Err(_) => DeflatedPreconditioner::Identity,
        },
    }
}

fn relative_residual<A: LinearOperator>(a: &A, x: &[f64], b: &[f64]) -> f64 {
    let mut r = vec![0.0; b.len()];
    a.apply(x, &mut r);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
    norm2(&r) / norm2(b).max(f64::MIN_POSITIVE)
}

/// Solves `(I − P₁ + 𝟙π̂₁ᵀ) y = b`.
fn deflated_solve(
    sys: &SplitSystem,
    p1: &CsrMatrix,
    pihat1: &[f64],
    b: &[f64],
    solver: ThetaSolver,
    tol: f64,
    stats: &mut Stats,
) -> Result<Vec<f64>> {
    let op = DeflatedOperator { p: p1, pihat: pihat1 };
    if solver != ThetaSolver::SparseLu {
        let m = approximate_complement_ilu(sys);
        let opts = KrylovOptions { tol, ..Default::default() };
        let sol = match solver {
            ThetaSolver::Gmres => gmres(&op, b, None, &m, opts),
            _ => bicgstab(&op, b, None, &m, opts),
        };
        stats.krylov_iterations += sol.iterations;
        if sol.converged {
            stats.max_residual = stats.max_residual.max(sol.residual);
            return Ok(sol.x);
        }
        stats.fallbacks += 1;
    }
    let y = DeflatedSolver::new(p1, pihat1)?.solve(b);
    stats.max_residual = stats.max_residual.max(relative_residual(&op, &y, b));
    Ok(y)
}

/// x = (I−P₂₂)⁻¹𝟙; y = (I−P₁+𝟙π̂₁ᵀ)⁻¹P₁₂x; y ← (I−P₂₂)⁻¹P₂₁y; θ = π̂₂ᵀ(x + y).
fn theta_three_solves(
    sys: &SplitSystem,
    p1: &CsrMatrix,
    pihat1: &[f64],
    pihat2: &[f64],
    solver: ThetaSolver,
    tol: f64,
    stats: &mut Stats,
) -> Result<f64> {
    let x = sys.lu22.solve(&vec![1.0; sys.p22.nrows()]);
    let y = deflated_solve(sys, p1, pihat1, &sys.p12.mul_vec(&x), solver, tol, stats)?;
    let y = sys.lu22.solve(&sys.p21.mul_vec(&y));
    Ok(dot(pihat2, &x) + dot(pihat2, &y))
}

/// θ and γ for one split, computed the way the recursion does.
pub fn theta_via_solves(
    p: &StochasticMatrix,
    split: BlockPartition,
    pihat1: &StationaryDistribution,
    pihat2: &StationaryDistribution,
    solver: ThetaSolver,
    tol: f64,
) -> Result<ThetaGamma> {
    let [alpha1, alpha2] = aggregated(p, split, pihat1, pihat2)?.stationary();
    let sys = SplitSystem::new(p.matrix(), split.m())?;
    let p1 = StochasticMatrix::from_trusted(sys.complement1(0.0));
    let mut stats = Stats::default();
    let theta = theta_three_solves(&sys, p1.matrix(), pihat1.as_slice(), pihat2.as_slice(), solver, tol, &mut stats)?;
    Ok(ThetaGamma { theta, gamma: alpha1 * theta - alpha2, expression_used: ThetaExpression::Theta4 })
}

/// The four equivalent dense θ expressions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaAlternatives {
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub theta5: f64,
}

impl ThetaAlternatives {
    pub fn values(&self) -> [f64; 4] {
        [self.theta2, self.theta3, self.theta4, self.theta5]
    }

    /// Largest pairwise difference.
    pub fn max_spread(&self) -> f64 {
        let v = self.values();
        let hi = v.iter().cloned().fold(f64::MIN, f64::max);
        let lo = v.iter().cloned().fold(f64::MAX, f64::min);
        hi - lo
    }
}

/// Largest size accepted by [`theta_alternatives`].
pub const THETA_ALTERNATIVES_MAX: usize = 500;

pub fn theta_alternatives(
    p: &StochasticMatrix,
    split: BlockPartition,
    pihat1: &StationaryDistribution,
    pihat2: &StationaryDistribution,
) -> Result<ThetaAlternatives> {
    let n = p.dim();
    if n > THETA_ALTERNATIVES_MAX {
        return Err(KemenyError::Precondition(format!("dense θ expressions need n ≤ {THETA_ALTERNATIVES_MAX}")));
    }
    if split.n() != n {
        return Err(KemenyError::DimensionMismatch("split does not match the chain".into()));
    }
    let m = split.m();
    let k = n - m;
    let pd = p.to_dense();
    let p11 = pd.view((0, 0), (m, m)).into_owned();
    let p12 = pd.view((0, m), (m, k)).into_owned();
    let p21 = pd.view((m, 0), (k, m)).into_owned();
    let p22 = pd.view((m, m), (k, k)).into_owned();
    let h1 = DVector::from_column_slice(pihat1.as_slice());
    let h2 = DVector::from_column_slice(pihat2.as_slice());
    let (one1, one2) = (dense::ones(m), dense::ones(k));
    let (i1, i2) = (DMatrix::<f64>::identity(m, m), DMatrix::<f64>::identity(k, k));

    // θ₂ = [0; π̂₂]ᵀ (I − P + [𝟙; 0][π̂₁ᵀ, 0])⁻¹ [0; 𝟙]
    let mut full = DMatrix::identity(n, n) - &pd;
    let mut top = full.view_mut((0, 0), (m, m));
    top += &one1 * h1.transpose();
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(m, k).fill(1.0);
    let z = dense::solve(&full, &rhs)?;
    let theta2 = h2.dot(&z.rows(m, k));

    // θ₃ = π̂₂ᵀ (I − P₂₂ − P₂₁ (I − P₁₁ + 𝟙π̂₁ᵀ)⁻¹ P₁₂)⁻¹ 𝟙
    let w = dense::inverse(&(&i1 - &p11 + &one1 * h1.transpose()))?;
    let a3 = &i2 - &p22 - &p21 * &w * &p12;
    let theta3 = h2.dot(&dense::solve(&a3, &one2)?);

    // θ₄ = π̂₂ᵀ (I + R₂₂ P₂₁ (I − P₁ + 𝟙π̂₁ᵀ)⁻¹ P₁₂) R₂₂ 𝟙
    let r22 = dense::inverse(&(&i2 - &p22))?;
    let p1 = &p11 + &p12 * &r22 * &p21;
    let v = &r22 * &one2;
    let y = dense::solve(&(&i1 - &p1 + &one1 * h1.transpose()), &(&p12 * &v))?;
    let theta4 = h2.dot(&(&v + &r22 * (&p21 * y)));

    // θ₅ = π̂₂ᵀ (I − P₂ + c P₂₁S𝟙 π̂₁ᵀSP₁₂)⁻¹ 𝟙, S = (I − P₁₁)⁻¹, c = 1/(1 + π̂₁ᵀS𝟙)
    let s = dense::inverse(&(&i1 - &p11))?;
    let c = 1.0 / (1.0 + h1.dot(&(&s * &one1)));
    let p2 = &p22 + &p21 * &s * &p12;
    let u = &p21 * (&s * &one1);
    let wt = h1.transpose() * &s * &p12;
    let a5 = &i2 - &p2 + (&u * wt) * c;
    let theta5 = h2.dot(&dense::solve(&a5, &one2)?);

    Ok(ThetaAlternatives { theta2, theta3, theta4, theta5 })
}

/// γ = [π̂₁ᵀ, −π̂₂ᵀ] (I − P + uvᵀ)⁻¹ [α₂𝟙; −α₁𝟙] for admissible (u, v).
pub fn gamma_resolvent(
    p: &StochasticMatrix,
    pi: &StationaryDistribution,
    split: BlockPartition,
    u: &[f64],
    v: &[f64],
) -> Result<f64> {
    let n = p.dim();
    if n > N_DENSE {
        return Err(KemenyError::Precondition(format!("resolvent form of γ needs n ≤ {N_DENSE}")));
    }
    if u.len() != n || v.len() != n || split.n() != n {
        return Err(KemenyError::DimensionMismatch(format!("u, v and the split must have size {n}")));
    }
    let v1: f64 = v.iter().sum();
    let piu = dot(pi.as_slice(), u);
    if v1.abs() < 1e-14 || piu.abs() < 1e-14 {
        return Err(KemenyError::Precondition("need vᵀ𝟙 ≠ 0 and πᵀu ≠ 0".into()));
    }
    let m = split.m();
    let (h1, a1) = pi.restrict(split.first());
    let (h2, a2) = pi.restrict(split.second());
    let mat = DMatrix::identity(n, n) - p.to_dense()
        + DVector::from_column_slice(u) * DVector::from_column_slice(v).transpose();
    let rhs = DVector::from_fn(n, |i, _| if i < m { a2 } else { -a1 });
    let z = dense::solve(&mat, &rhs)?;
    let left = DVector::from_fn(n, |i, _| if i < m { h1.as_slice()[i] } else { -h2.as_slice()[i - m] });
    Ok(left.dot(&z))
}

/// Kemeny's constant by recursive stochastic complements.
pub fn kemeny_dnc(p: &StochasticMatrix, pi: &StationaryDistribution, cfg: &DncConfig) -> Result<KemenyResult> {
    let start = Instant::now();
    cfg.validate()?;
    if pi.len() != p.dim() {
        return Err(KemenyError::DimensionMismatch(format!("π has {} entries for n = {}", pi.len(), p.dim())));
    }
    require_irreducible(p)?;
    let (kappa, stats) = node(p.matrix().clone(), pi.as_slice().to_vec(), cfg, 0, "root".into())?;
    let mut r = KemenyResult::new(kappa, Method::Dnc, p.dim(), p.nnz());
    let d = &mut r.diagnostics;
    d.elapsed_secs = start.elapsed().as_secs_f64();
    d.stationary_residual = Some(pi.residual(p));
    d.depth = Some(stats.depth);
    d.leaves = Some(stats.leaves);
    d.max_residual = Some(stats.max_residual);
    if cfg.solver != ThetaSolver::SparseLu {
        d.krylov_iterations = Some(stats.krylov_iterations);
        d.krylov_fallbacks = Some(stats.fallbacks);
    }
    Ok(r)
}

/// Computes π first, then calls [`kemeny_dnc`].
pub fn kemeny_dnc_auto(p: &StochasticMatrix, cfg: &DncConfig) -> Result<KemenyResult> {
    let pi = stationary_default(p)?;
    kemeny_dnc(p, &pi, cfg)
}

fn node(p: CsrMatrix, pi: Vec<f64>, cfg: &DncConfig, depth: usize, path: String) -> Result<(f64, Stats)> {
    let wrap = |e: KemenyError| match e {
        e @ KemenyError::Recursion { .. } => e,
        e => KemenyError::Recursion { path: path.clone(), source: Box::new(e) },
    };
    let n = p.nrows();
    if n < cfg.n0 || n == 1 || depth >= cfg.max_depth {
        if n > cfg.n_dense {
            return Err(wrap(KemenyError::Precondition(format!(
                "maximum depth {} reached with a {n}-state block",
                cfg.max_depth
            ))));
        }
        let kappa = kemeny_dense(&p.to_dense()).map_err(wrap)?;
        return Ok((kappa, Stats::leaf(depth)));
    }

    let (p, pi, m) = choose_split(p, pi, cfg.split);
    let sys = SplitSystem::new(&p, m).map_err(wrap)?;
    drop(p);
    let (c1, c2) = rayon::join(|| sys.complement1(cfg.drop_tol), || sys.complement2(cfg.drop_tol));
    let p1 = StochasticMatrix::from_trusted(c1).into_matrix();
    let p2 = StochasticMatrix::from_trusted(c2).into_matrix();
    if cfg!(debug_assertions) {
        for c in [&p1, &p2] {
            let report = check_irreducible(c);
            if !report.irreducible {
                return Err(wrap(KemenyError::Reducible { components: report.components }));
            }
        }
    }
    let alpha1: f64 = pi[..m].iter().sum();
    let alpha2: f64 = pi[m..].iter().sum();
    let pihat1: Vec<f64> = pi[..m].iter().map(|v| v / alpha1).collect();
    let pihat2: Vec<f64> = pi[m..].iter().map(|v| v / alpha2).collect();
    drop(pi);

    let mut stats = Stats::default();
    let theta = theta_three_solves(&sys, &p1, &pihat1, &pihat2, cfg.solver, cfg.tol, &mut stats).map_err(wrap)?;
    let gamma = alpha1 * theta - alpha2;
    drop(sys);

    let (left, right) = rayon::join(
        || node(p1, pihat1, cfg, depth + 1, format!("{path}/1")),
        || node(p2, pihat2, cfg, depth + 1, format!("{path}/2")),
    );
    let (k1, s1) = left?;
    let (k2, s2) = right?;
    Ok((k1 + k2 + gamma, stats.merge(s1).merge(s2)))
}

/// Returns the (possibly permuted) chain, π and the split index.
fn choose_split(p: CsrMatrix, pi: Vec<f64>, strategy: SplitStrategy) -> (CsrMatrix, Vec<f64>, usize) {
    let n = p.nrows();
    let half = n / 2;
    if strategy == SplitStrategy::Halving {
        return (p, pi, half);
    }
    match nd_split(&p) {
        Some((perm, m)) => {
            let pp = p.permute(&perm);
            let pip = perm.iter().map(|&i| pi[i]).collect();
            (pp, pip, m)
        }
        None => (p, pi, half),
    }
}

/// Entries of `p` that couple the two sides when position `< m` is side one.
fn coupling_nnz(p: &CsrMatrix, pos: &[usize], m: usize) -> usize {
    p.iter().filter(|&(i, j, _)| (pos[i] < m) != (pos[j] < m)).count()
}

/// Candidate splits from one separator bisection: `A | S∪B` and `A∪S | B`,
/// compared with natural halving by coupling nnz. Splits that leave fewer
/// than n/10 states on one side are not considered. `None` means halving.
pub(crate) fn nd_split(p: &CsrMatrix) -> Option<(Vec<usize>, usize)> {
    let n = p.nrows();
    let graph = p.symmetrized_pattern();
    let b = bisect(&graph, &LevelSetPartitioner);
    if b.part_a.is_empty() || b.part_b.is_empty() {
        return None;
    }
    let perm: Vec<usize> = b.part_a.iter().chain(&b.separator).chain(&b.part_b).copied().collect();
    let mut pos = vec![0; n];
    for (k, &i) in perm.iter().enumerate() {
        pos[i] = k;
    }
    let natural: Vec<usize> = (0..n).collect();
    let mut best: Option<(usize, usize)> = None;
    let best_natural = coupling_nnz(p, &natural, n / 2);
    let min_side = (n / 10).max(1);
    for m in [b.part_a.len(), b.part_a.len() + b.separator.len()] {
        if m < min_side || n - m < min_side {
            continue;
        }
        let c = coupling_nnz(p, &pos, m);
        if c < best_natural && best.is_none_or(|(bc, _)| c < bc) {
            best = Some((c, m));
        }
    }
    best.map(|(_, m)| (perm, m))
}
