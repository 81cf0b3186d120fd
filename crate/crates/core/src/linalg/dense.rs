//! Dense helpers on top of nalgebra, used for base cases and reference values.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{KemenyError, Result};

pub fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(KemenyError::DimensionMismatch("inverse of a non-square matrix".into()));
    }
    let inv = m.clone().lu().try_inverse().ok_or(KemenyError::Singular(0))?;
    if inv.iter().any(|v| !v.is_finite()) {
        return Err(KemenyError::Singular(0));
    }
    Ok(inv)
}

pub fn solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    m.clone().lu().solve(b).ok_or(KemenyError::Singular(0))
}

/// Maximum absolute row sum.
pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn ones(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0)
}

/// Power of two closest to 1/n. With h = c𝟙 the diagonal entries 1 + c are
/// exact, which keeps rounding of the input matrix out of Tr(Z).
pub fn deflation_weight(n: usize) -> f64 {
    2f64.powi(-((n as f64).log2().round() as i32))
}

/// Kemeny's constant of a dense stochastic matrix as `Tr((I − P + c𝟙𝟙ᵀ)⁻¹) − 1/(nc)`,
/// the deflated-trace formula with h = c𝟙 (c = 1/n gives the textbook form).
pub fn kemeny_trace(p: &DMatrix<f64>) -> Result<f64> {
    let n = p.nrows();
    if n == 0 {
        return Err(KemenyError::InvalidInput("empty matrix".into()));
    }
    let c = deflation_weight(n);
    let m = DMatrix::identity(n, n) - p + DMatrix::from_element(n, n, c);
    let z = inverse(&m)?;
    Ok(refined_trace(&m, &z) - 1.0 / (n as f64 * c))
}

/// Tr(M⁻¹) after one step of iterative refinement on the computed inverse
/// `z`: Tr(Z + Z(I − MZ)).
pub fn refined_trace(m: &DMatrix<f64>, z: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let r = DMatrix::identity(n, n) - m * z;
    z.trace() + z.component_mul(&r.transpose()).sum()
}

/// All eigenvalues of a real square matrix.
///
/// The Francis iteration can stall on matrices whose spectrum sits on a
/// circle (cyclic permutations); on failure the matrix is shifted by a
/// constant and the shift is removed from the result.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    let max_iter = 100 * n.max(10);
    for shift in [0.0, 0.5, -0.37, 1.3] {
        let shifted = m + DMatrix::identity(n, n) * shift;
        if let Some(schur) = shifted.try_schur(f64::EPSILON, max_iter) {
            let ev = schur.complex_eigenvalues();
            if ev.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Ok(ev.iter().map(|z| z - shift).collect());
            }
        }
    }
    Err(KemenyError::NotConverged { method: "Schur", iterations: max_iter, residual: f64::NAN })
}
