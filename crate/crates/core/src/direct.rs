//! Dense reference computations: deflated-inverse trace and eigenvalue sum.

use std::time::Instant;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{KemenyError, Result};
use crate::linalg::dense;
use crate::markov::{require_irreducible, stationary_default, StochasticMatrix};
use crate::result::{KemenyResult, Method};

/// Largest n for which a dense n×n inverse is formed.
pub const N_DENSE: usize = 4096;

#[derive(Clone, Debug)]
pub struct DirectOptions {
    /// Defaults to 𝟙.
    pub g: Option<Vec<f64>>,
    /// Defaults to c𝟙 with c the power of two closest to 1/n; any h with
    /// hᵀ𝟙 ≠ 0 gives the same κ.
    pub h: Option<Vec<f64>>,
    pub n_dense: usize,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self { g: None, h: None, n_dense: N_DENSE }
    }
}

/// κ = Tr((I − P + 𝟙hᵀ)⁻¹) − 1/(hᵀ𝟙) with the default h.
pub fn kemeny_direct(p: &StochasticMatrix) -> Result<KemenyResult> {
    kemeny_direct_with(p, &DirectOptions::default())
}

/// κ = Tr(Z) − πᵀZ𝟙 with Z = (I − P + ghᵀ)⁻¹.
pub fn kemeny_direct_with(p: &StochasticMatrix, opts: &DirectOptions) -> Result<KemenyResult> {
    let start = Instant::now();
    let n = p.dim();
    if n > opts.n_dense {
        return Err(KemenyError::Precondition(format!(
            "n = {n} exceeds the dense limit {}; use dnc or hutchpp",
            opts.n_dense
        )));
    }
    require_irreducible(p)?;
    let g = opts.g.clone().unwrap_or_else(|| vec![1.0; n]);
    let h = opts.h.clone().unwrap_or_else(|| vec![dense::deflation_weight(n); n]);
    if g.len() != n || h.len() != n {
        return Err(KemenyError::DimensionMismatch(format!("g, h must have length {n}")));
    }
    let h_sum: f64 = h.iter().sum();
    if h_sum.abs() < 1e-14 {
        return Err(KemenyError::Precondition("hᵀ𝟙 = 0".into()));
    }
    let general_g = g.iter().any(|&v| v != 1.0);
    let pi = if general_g { Some(stationary_default(p)?) } else { None };
    if let Some(pi) = &pi {
        let pg: f64 = pi.as_slice().iter().zip(&g).map(|(a, b)| a * b).sum();
        if pg.abs() < 1e-14 {
            return Err(KemenyError::Precondition("πᵀg = 0".into()));
        }
    }
    let gv = DVector::from_vec(g);
    let hv = DVector::from_vec(h);
    let m = DMatrix::identity(n, n) - p.to_dense() + &gv * hv.transpose();
    let z = dense::inverse(&m)?;
    let z1 = z.column_sum();
    let correction = match &pi {
        // Z𝟙 = 𝟙/(hᵀ𝟙) when g = 𝟙.
        None => 1.0 / h_sum,
        Some(pi) => pi.as_slice().iter().zip(z1.iter()).map(|(a, b)| a * b).sum(),
    };
    let kappa = dense::refined_trace(&m, &z) - correction;
    let residual = (&m * z1 - DVector::from_element(n, 1.0)).amax();
    let mut r = KemenyResult::new(kappa, Method::Direct, n, p.nnz());
    r.diagnostics.max_residual = Some(residual);
    r.diagnostics.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

/// Trace formula on a dense stochastic matrix, without validation.
pub fn kemeny_dense(p: &DMatrix<f64>) -> Result<f64> {
    dense::kemeny_trace(p)
}

/// Σ 1/(1 − λᵢ) over all eigenvalues except the Perron root.
pub fn kemeny_eig(p: &StochasticMatrix) -> Result<KemenyResult> {
    let start = Instant::now();
    let n = p.dim();
    require_irreducible(p)?;
    let ev = dense::eigenvalues(&p.to_dense())?;
    let (kappa, imag) = eigen_sum(&ev);
    if imag.abs() > 1e-8 * (1.0 + kappa.abs()) {
        return Err(KemenyError::NotConverged { method: "eigenvalue sum", iterations: 1, residual: imag.abs() });
    }
    let mut r = KemenyResult::new(kappa, Method::Eig, n, p.nnz());
    r.diagnostics.imaginary_residue = Some(imag.abs());
    r.diagnostics.elapsed_secs = start.elapsed().as_secs_f64();
    Ok(r)
}

fn eigen_sum(ev: &[Complex<f64>]) -> (f64, f64) {
    let one = Complex::new(1.0, 0.0);
    let perron = (0..ev.len())
        .min_by(|&a, &b| (ev[a] - one).norm().total_cmp(&(ev[b] - one).norm()))
        .unwrap_or(0);
    let s: Complex<f64> = ev
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != perron)
        .map(|(_, &l)| one / (one - l))
        .sum();
    (s.re, s.im)
}

/// (κ(AB), κ(BA)) for an m×n stochastic A and n×m stochastic B.
pub fn kemeny_product_identity_check(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(f64, f64)> {
    if a.ncols() != b.nrows() || a.nrows() != b.ncols() {
        return Err(KemenyError::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let ab = StochasticMatrix::from_dense(&(a * b))?;
    let ba = StochasticMatrix::from_dense(&(b * a))?;
    require_irreducible(&ab)?;
    require_irreducible(&ba)?;
    Ok((kemeny_dense(&ab.to_dense())?, kemeny_dense(&ba.to_dense())?))
}
