//! Hutch++ estimate of κ for reversible chains.
//!
//! For a reversible chain with symmetrization N = Π^{1/2}PΠ^{-1/2} and unit
//! Perron vector q = √π, the matrix I − P + 𝟙πᵀ is similar to the symmetric
//! positive definite A = I − N + qqᵀ, so κ = Tr(A⁻¹) − 1. Products with A⁻¹
//! come from preconditioned CG.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KemenyError, Result};
use crate::linalg::krylov::{cg, KrylovOptions, LinearOperator, Preconditioner};
use crate::linalg::sparse::{dot, CsrMatrix};
use crate::linalg::Ic0;
use crate::markov::{StochasticMatrix, SymmetricWalk};
use crate::result::{KemenyResult, Method};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HutchConfig {
    pub delta: f64,
    pub epsilon: f64,
    /// Explicit query count; derived from (δ, ε) when absent.
    pub samples: Option<usize>,
    pub seed: u64,
    /// Relative residual target of every CG solve.
    pub inner_tol: f64,
}

impl Default for HutchConfig {
    fn default() -> Self {
        Self { delta: 0.25, epsilon: 0.1, samples: None, seed: 0, inner_tol: 1e-3 }
    }
}

impl HutchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) || !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(KemenyError::InvalidInput(format!(
                "need 0 < δ < 1 and 0 < ε < 1, got δ = {}, ε = {}",
                self.delta, self.epsilon
            )));
        }
        if let Some(l) = self.samples {
            if l < 3 {
                return Err(KemenyError::InvalidInput(format!("need at least 3 queries, got {l}")));
            }
        }
        if !(self.inner_tol > 0.0) {
            return Err(KemenyError::InvalidInput("inner tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn queries(&self) -> usize {
        self.samples.unwrap_or_else(|| sample_count(self.delta, self.epsilon))
    }
}

/// Query count l = 2k + m with sketch size k = ⌈√ln(1/δ) / (3ε)⌉ and
/// m = k + ⌊ln(1/δ)⌋ Hutchinson probes, at least 3. (¼, 0.1) gives 13.
pub fn sample_count(delta: f64, epsilon: f64) -> usize {
    let log = (1.0 / delta).ln();
    let k = (log.sqrt() / (3.0 * epsilon)).ceil().max(1.0) as usize;
    let m = k + log.floor() as usize;
    (2 * k + m).max(3)
}

/// (sketch, deflation, Hutchinson) query split: ⌊l/3⌋, ⌊l/3⌋, the rest.
pub fn query_split(l: usize) -> (usize, usize, usize) {
    let k = l / 3;
    (k, k, l - 2 * k)
}

/// `I − N + qqᵀ`
struct SymmetricOperator<'a> {
    n: &'a CsrMatrix,
    q: &'a [f64],
}

impl LinearOperator for SymmetricOperator<'_> {
    fn dim(&self) -> usize {
        self.n.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.n.matvec(x, y);
        let s = dot(self.q, x);
        for ((yi, xi), qi) in y.iter_mut().zip(x).zip(self.q) {
            *yi = xi - *yi + s * qi;
        }
    }
}

/// (LLᵀ + qqᵀ)⁻¹ by Sherman–Morrison, with LLᵀ the IC(0) factorization of
/// the singular I − N (pivot floor on).
struct RankOnePreconditioner {
    ic: Ic0,
    w: Vec<f64>,
    denom: f64,
}

impl RankOnePreconditioner {
    fn new(walk: &SymmetricWalk) -> Result<Self> {
        let ic = Ic0::factor_semidefinite(&walk.n_matrix.identity_minus(), 1e-8)?;
        let w = ic.backward(&ic.forward(&walk.q));
        let denom = 1.0 + dot(&walk.q, &w);
        Ok(Self { ic, w, denom })
    }
}

impl Preconditioner for RankOnePreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let y = self.ic.backward(&self.ic.forward(r));
        let c = dot(&self.w, r) / self.denom;
        for ((zi, yi), wi) in z.iter_mut().zip(&y).zip(&self.w) {
            *zi = yi - c * wi;
        }
    }
}

/// Products with (I − P + 𝟙hᵀ)⁻¹ and its symmetric form for a reversible chain.
pub struct ResolventOracle<'a> {
    walk: &'a SymmetricWalk,
    precond: RankOnePreconditioner,
    pub inner_tol: f64,
}

/// One oracle answer with its CG statistics.
#[derive(Clone, Debug)]
pub struct OracleSolve {
    pub y: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl<'a> ResolventOracle<'a> {
    pub fn new(walk: &'a SymmetricWalk, inner_tol: f64) -> Result<Self> {
        Ok(Self { walk, precond: RankOnePreconditioner::new(walk)?, inner_tol })
    }

    /// y = (I − N + qqᵀ)⁻¹ x
    pub fn solve_symmetric(&self, x: &[f64]) -> Result<OracleSolve> {
        let op = SymmetricOperator { n: &self.walk.n_matrix, q: &self.walk.q };
        let opts = KrylovOptions { tol: self.inner_tol, max_iter: 10 * op.dim().max(100), restart: 0 };
        let sol = cg(&op, x, None, &self.precond, opts);
        let (iterations, residual) = (sol.iterations, sol.residual);
        Ok(OracleSolve { y: sol.check()?, iterations, residual })
    }

    /// y = (I − P + 𝟙hᵀ)⁻¹ x with P the random walk and h = 𝟙/n by default.
    pub fn solve(&self, x: &[f64], h: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.walk.dim();
        if x.len() != n || h.is_some_and(|h| h.len() != n) {
            return Err(KemenyError::DimensionMismatch(format!("vectors must have length {n}")));
        }
        // Similarity with D^{1/2}, then h = π → general h through a rank-one
        // update whose denominator is 1 because (I − P + 𝟙πᵀ)⁻¹𝟙 = 𝟙.
        let total: f64 = self.walk.degrees.iter().sum();
        let sq: Vec<f64> = self.walk.degrees.iter().map(|d| d.sqrt()).collect();
        let xs: Vec<f64> = x.iter().zip(&sq).map(|(a, s)| a * s).collect();
        let ys = self.solve_symmetric(&xs)?.y;
        let mut y: Vec<f64> = ys.iter().zip(&sq).map(|(a, s)| a / s).collect();
        let uniform = 1.0 / n as f64;
        let shift: f64 = (0..n)
            .map(|i| (h.map_or(uniform, |h| h[i]) - self.walk.degrees[i] / total) * y[i])
            .sum();
        y.iter_mut().for_each(|v| *v -= shift);
        Ok(y)
    }
}

/// Convenience wrapper: one solve with (I − P + 𝟙hᵀ)⁻¹.
pub fn resolvent_oracle(walk: &SymmetricWalk, h: Option<&[f64]>, x: &[f64], inner_tol: f64) -> Result<Vec<f64>> {
    ResolventOracle::new(walk, inner_tol)?.solve(x, h)
}

fn rademacher(n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
}

/// Hutch++ on a chain given directly; the chain must be reversible.
pub fn kemeny_hutchpp(p: &StochasticMatrix, cfg: &HutchConfig) -> Result<KemenyResult> {
    let walk = SymmetricWalk::from_reversible(p)?;
    let mut r = kemeny_hutchpp_walk(&walk, cfg)?;
    r.nnz = p.nnz();
    Ok(r)
}

/// Hutch++ on a symmetric normalization.
pub fn kemeny_hutchpp_walk(walk: &SymmetricWalk, cfg: &HutchConfig) -> Result<KemenyResult> {
    let start = Instant::now();
    cfg.validate()?;
    let n = walk.dim();
    let l = cfg.queries();
    let (k, _, m) = query_split(l);
    let oracle = ResolventOracle::new(walk, cfg.inner_tol)?;
    let solve_all = |cols: Vec<Vec<f64>>| -> Result<Vec<OracleSolve>> {
        cols.par_iter().map(|c| oracle.solve_symmetric(c)).collect()
    };

    // Sketch: Q = orth(A S).
    let sketch: Vec<Vec<f64>> = (0..k).map(|j| rademacher(n, cfg.seed, j as u64)).collect();
    let a_s = solve_all(sketch)?;
    let mut solves: Vec<(usize, f64)> = a_s.iter().map(|s| (s.iterations, s.residual)).collect();
    let cols: Vec<f64> = a_s.iter().flat_map(|s| s.y.iter().copied()).collect();
    let q = DMatrix::from_column_slice(n, k, &cols).qr().q();

    // Exact trace on span(Q).
    let q_cols: Vec<Vec<f64>> = (0..k).map(|j| q.column(j).iter().copied().collect()).collect();
    let a_q = solve_all(q_cols.clone())?;
    solves.extend(a_q.iter().map(|s| (s.iterations, s.residual)));
    let low_rank: f64 = q_cols.iter().zip(&a_q).map(|(qc, s)| dot(qc, &s.y)).sum();

    // Hutchinson on the complement of span(Q).
    let project = |g: &mut Vec<f64>| {
        let c = q.transpose() * nalgebra::DVector::from_column_slice(g);
        let qc = &q * c;
        g.iter_mut().zip(qc.iter()).for_each(|(gi, v)| *gi -= v);
    };
    let probes: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut g = rademacher(n, cfg.seed, (k + j) as u64);
            project(&mut g);
            g
        })
        .collect();
    let a_g = solve_all(probes.clone())?;
    solves.extend(a_g.iter().map(|s| (s.iterations, s.residual)));
    let mut hutch = 0.0;
    for (g, s) in probes.iter().zip(&a_g) {
        let mut y = s.y.clone();
        project(&mut y);
        hutch += dot(g, &y);
    }
    let trace = low_rank + hutch / m as f64;

    let mut r = KemenyResult::new(trace - 1.0, Method::Hutchpp, n, walk.n_matrix.nnz());
    let d = &mut r.diagnostics;
    d.samples = Some(l);
    d.seed = Some(cfg.seed);
    d.krylov_iterations = Some(solves.iter().map(|s| s.0).sum());
    d.probe_residuals = solves.iter().map(|s| s.1).collect();
    d.max_residual = d.probe_residuals.iter().cloned().reduce(f64::max);
    d.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direct::kemeny_direct;
    use crate::generators::{grid_graph, path_graph, random_irreducible};
    use crate::markov::symmetric_walk;
    use nalgebra::DVector;

    #[test]
    fn sample_counts() {
        assert_eq!(sample_count(0.25, 0.1), 13);
        assert_eq!(query_split(13), (4, 4, 5));
        assert_eq!(sample_count(0.25, 0.05), 25);
        assert_eq!(sample_count(0.5, 0.99), 3);
    }

    #[test]
    fn oracle_fixed_vector_and_dense_agreement() {
        let walk = symmetric_walk(&path_graph(100)).unwrap();
        let ones = vec![1.0; 100];
        let y = resolvent_oracle(&walk, None, &ones, 1e-12).unwrap();
        assert!(y.iter().all(|v| (v - 1.0).abs() < 1e-8));
        let p = walk.random_walk().to_dense();
        let m = DMatrix::identity(100, 100) - p + DMatrix::from_element(100, 100, 0.01);
        let x: Vec<f64> = (0..100).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let y = resolvent_oracle(&walk, None, &x, 1e-12).unwrap();
        let exact = m.lu().solve(&DVector::from_vec(x)).unwrap();
        assert!(y.iter().zip(exact.iter()).all(|(a, b)| (a - b).abs() < 1e-8));
    }

    #[test]
    fn full_sketch_is_exact() {
        // k = n: span(Q) is everything and the Hutchinson part vanishes.
        let p = StochasticMatrix::uniform(30);
        let cfg = HutchConfig { inner_tol: 1e-12, samples: Some(90), ..Default::default() };
        let k = kemeny_hutchpp(&p, &cfg).unwrap().kappa;
        assert!((k - 29.0).abs() < 1e-8, "{k}");
    }

    #[test]
    fn grid_estimate_and_determinism() {
        let walk = symmetric_walk(&grid_graph(10, 10)).unwrap();
        let exact = kemeny_direct(&walk.random_walk()).unwrap().kappa;
        let cfg = HutchConfig { seed: 42, ..Default::default() };
        let a = kemeny_hutchpp_walk(&walk, &cfg).unwrap();
        let b = kemeny_hutchpp_walk(&walk, &cfg).unwrap();
        assert_eq!(a.kappa.to_bits(), b.kappa.to_bits());
        assert!((a.kappa - exact).abs() / exact < 0.2, "{} vs {exact}", a.kappa);
        assert_eq!(a.diagnostics.samples, Some(13));
    }

    #[test]
    fn non_reversible_chain_is_refused() {
        let mut rng = <ChaCha8Rng as SeedableRng>::seed_from_u64(3);
        let p = random_irreducible(20, 0.2, &mut rng);
        assert!(matches!(kemeny_hutchpp(&p, &HutchConfig::default()), Err(KemenyError::Precondition(_))));
    }
}
