//! A-priori bounds on ‖π₁‖, θ and γ, and first-order perturbation bounds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{KemenyError, Result};
use crate::linalg::dense;
use crate::linalg::sparse::CsrMatrix;
use crate::linalg::SparseLu;
use crate::markov::{
    stationary_default, stochastic_complements, BlockPartition, DeflatedSolver, StationaryDistribution,
    StochasticMatrix,
};

/// Resolvent norms are computed exactly up to this size and estimated above.
pub const EXACT_NORM_MAX: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo > hi || lo.is_nan() || hi.is_nan() {
            return Err(KemenyError::InvalidInput(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pi1Bounds {
    pub interval: Interval,
    /// True when ‖P₁₁‖∞ or ‖P₂₂‖∞ equals 1 and only [0, 1] is returned.
    pub trivial: bool,
}

struct BlockNorms {
    p11: f64,
    p12: f64,
    p21: f64,
    p22: f64,
}

fn block_norms(p: &StochasticMatrix, split: BlockPartition) -> Result<BlockNorms> {
    let b = p.blocks(split)?;
    Ok(BlockNorms {
        p11: b.p11.matrix().norm_inf(),
        p12: b.p12.norm_inf(),
        p21: b.p21.norm_inf(),
        p22: b.p22.matrix().norm_inf(),
    })
}

/// (1−‖P₂₂‖)/(1−‖P₂₂‖+‖P₁₂‖) ≤ ‖π₁‖ ≤ ‖P₂₁‖/(1−‖P₁₁‖+‖P₂₁‖), ∞-norms.
pub fn pi1_bounds(p: &StochasticMatrix, split: BlockPartition) -> Result<Pi1Bounds> {
    let nb = block_norms(p, split)?;
    if nb.p11 >= 1.0 || nb.p22 >= 1.0 {
        return Ok(Pi1Bounds { interval: Interval { lo: 0.0, hi: 1.0 }, trivial: true });
    }
    let lo = (1.0 - nb.p22) / (1.0 - nb.p22 + nb.p12);
    let hi = nb.p21 / (1.0 - nb.p11 + nb.p21);
    Ok(Pi1Bounds { interval: Interval { lo: lo.min(hi), hi: hi.max(lo) }, trivial: false })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaBound {
    pub value: f64,
    /// The deflated-resolvent norm was estimated rather than computed.
    pub estimated: bool,
}

/// θ ≤ ‖(I−P₂₂)⁻¹‖∞ (1 + ‖P₁₂‖∞ ‖(I−P₁+𝟙π̂₁ᵀ)⁻¹‖∞).
///
/// (I−P₂₂)⁻¹ is nonnegative, so its ∞-norm is max((I−P₂₂)⁻¹𝟙), one solve.
pub fn theta_upper_bound(
    p: &StochasticMatrix,
    split: BlockPartition,
    pihat1: &StationaryDistribution,
) -> Result<ThetaBound> {
    let b = p.blocks(split)?;
    let a22 = b.p22.identity_minus();
    let lu22 = SparseLu::factor(&a22)?;
    let r22 = lu22.solve(&vec![1.0; a22.nrows()]).into_iter().fold(0.0, f64::max);
    let pi = stationary_for_pihat(p, split, pihat1)?;
    let pair = stochastic_complements(p, split, &pi)?;
    let (d, estimated) = deflated_inverse_norm(pair.p1.matrix(), pihat1.as_slice())?;
    Ok(ThetaBound { value: r22 * (1.0 + b.p12.norm_inf() * d), estimated })
}

/// Any π works for the complements; only π̂₁ enters the bound.
fn stationary_for_pihat(
    p: &StochasticMatrix,
    split: BlockPartition,
    pihat1: &StationaryDistribution,
) -> Result<StationaryDistribution> {
    if pihat1.len() != split.m() {
        return Err(KemenyError::DimensionMismatch("π̂₁ does not match the split".into()));
    }
    stationary_default(p)
}

/// ‖(I − P + 𝟙π̂ᵀ)⁻¹‖∞: exact for small n, Hager estimate otherwise.
fn deflated_inverse_norm(p: &CsrMatrix, pihat: &[f64]) -> Result<(f64, bool)> {
    let n = p.nrows();
    if n <= EXACT_NORM_MAX {
        let h = DVector::from_column_slice(pihat);
        let m = DMatrix::identity(n, n) - p.to_dense() + dense::ones(n) * h.transpose();
        return Ok((dense::norm_inf(&dense::inverse(&m)?), false));
    }
    let s = DeflatedSolver::new(p, pihat)?;
    Ok((hager_inverse_norm_inf(n, |x| s.solve(x), |x| s.solve_transpose(x)), true))
}

/// Hager's estimate of ‖A⁻¹‖∞ = ‖A⁻ᵀ‖₁ from solves with A and Aᵀ. The
/// estimate never exceeds the true norm.
pub fn hager_inverse_norm_inf<F, G>(n: usize, solve: F, solve_transpose: G) -> f64
where
    F: Fn(&[f64]) -> Vec<f64>,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = vec![1.0 / n as f64; n];
    let mut est = 0.0;
    for _ in 0..5 {
        let y = solve_transpose(&x);
        est = y.iter().map(|v| v.abs()).sum();
        let xi: Vec<f64> = y.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
        let z = solve(&xi);
        let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
        if zmax <= ztx {
            break;
        }
        x = vec![0.0; n];
        x[j] = 1.0;
    }
    est
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaBounds {
    pub interval: Interval,
    /// Radius of |γ| ≤ 2‖(I−P+𝟙πᵀ)⁻¹‖∞ max(‖π₁‖, ‖π₂‖), when computed.
    pub resolvent_radius: Option<f64>,
    pub theta_exact: bool,
}

/// Interval containing γ = ‖π₁‖(1 + θ) − 1.
///
/// With an exact θ both signs of 1 + θ are handled; without one, the
/// θ upper bound gives the upper end only and the resolvent bound (dense
/// sizes) supplies the lower end.
pub fn gamma_bounds(p: &StochasticMatrix, split: BlockPartition, theta: Option<f64>) -> Result<GammaBounds> {
    let pb = pi1_bounds(p, split)?.interval;
    let pi = stationary_default(p)?;
    let (pihat1, alpha1) = pi.restrict(split.first());
    let mut interval = match theta {
        Some(t) => {
            let s = 1.0 + t;
            if s >= 0.0 {
                Interval { lo: pb.lo * s - 1.0, hi: pb.hi * s - 1.0 }
            } else {
                Interval { lo: pb.hi * s - 1.0, hi: pb.lo * s - 1.0 }
            }
        }
        None => {
            let s = 1.0 + theta_upper_bound(p, split, &pihat1)?.value;
            let hi = if s >= 0.0 { pb.hi * s } else { pb.lo * s } - 1.0;
            Interval { lo: f64::NEG_INFINITY, hi }
        }
    };
    let mut resolvent_radius = None;
    if p.dim() <= EXACT_NORM_MAX {
        let (z, _) = deflated_inverse_norm(p.matrix(), pi.as_slice())?;
        let r = 2.0 * z * alpha1.max(1.0 - alpha1);
        interval = interval.intersect(&Interval { lo: -r, hi: r });
        resolvent_radius = Some(r);
    }
    Ok(GammaBounds { interval, resolvent_radius, theta_exact: theta.is_some() })
}

/// Direction E (E𝟙 = 0, ‖E‖∞ ≤ 1) and step ε ≥ 0 of P(ε) = P + εE.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSpec {
    e: DMatrix<f64>,
    eps: f64,
}

impl PerturbationSpec {
    pub fn new(e: DMatrix<f64>, eps: f64) -> Result<Self> {
        if !(eps >= 0.0) {
            return Err(KemenyError::InvalidInput(format!("ε must be nonnegative, got {eps}")));
        }
        if let Some((row, r)) = e.row_iter().enumerate().find(|(_, r)| r.sum().abs() > 1e-12) {
            return Err(KemenyError::NotStochastic { row, sum: r.sum() });
        }
        if dense::norm_inf(&e) > 1.0 + 1e-12 {
            return Err(KemenyError::InvalidInput("‖E‖∞ must not exceed 1".into()));
        }
        Ok(Self { e, eps })
    }

    pub fn e(&self) -> &DMatrix<f64> {
        &self.e
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.e.clone(), eps)
    }

    /// P + εE, rejected if an entry turns negative.
    pub fn apply(&self, p: &StochasticMatrix) -> Result<StochasticMatrix> {
        if self.e.shape() != (p.dim(), p.dim()) {
            return Err(KemenyError::DimensionMismatch("E does not match P".into()));
        }
        StochasticMatrix::from_dense(&(p.to_dense() + &self.e * self.eps))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationEstimate {
    /// ε‖Z²‖_F‖E‖_F
    pub bound: f64,
    /// ε·Tr(Z²E)
    pub first_order: f64,
}

/// First-order change of κ under P → P + εE, with Z = (I − P + 𝟙hᵀ)⁻¹
/// (h = 𝟙/n by default).
pub fn perturbation_bound(
    p: &StochasticMatrix,
    spec: &PerturbationSpec,
    h: Option<&[f64]>,
) -> Result<PerturbationEstimate> {
    let n = p.dim();
    if spec.e.shape() != (n, n) {
        return Err(KemenyError::DimensionMismatch("E does not match P".into()));
    }
    let h = h.map(DVector::from_column_slice).unwrap_or_else(|| DVector::from_element(n, 1.0 / n as f64));
    if h.sum().abs() < 1e-14 {
        return Err(KemenyError::Precondition("hᵀ𝟙 = 0".into()));
    }
    let m = DMatrix::identity(n, n) - p.to_dense() + dense::ones(n) * h.transpose();
    let z = dense::inverse(&m)?;
    let z2 = &z * &z;
    Ok(PerturbationEstimate {
        bound: spec.eps * z2.norm() * spec.e.norm(),
        first_order: spec.eps * (&z2 * &spec.e).trace(),
    })
}
