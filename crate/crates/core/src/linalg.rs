use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance, relative to the trace, for eigenvalues that count as rounding noise.
const PSD_TOLERANCE: f64 = 1e-9;
const JITTER: f64 = 1e-12;

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Symmetric factor `S` with `S·Sᵀ = m`.
///
/// Cholesky is tried first; positive semidefinite matrices (e.g. zero noise
/// blocks) fall back to the eigen square root.
pub fn sqrt_psd(m: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.l());
    }
    let eig = m.clone().symmetric_eigen();
    let trace = m.trace().abs().max(f64::MIN_POSITIVE);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() || min < -PSD_TOLERANCE * trace {
        return Err(Error::NotPositiveDefinite {
            context,
            min_eigenvalue: min,
            matrix: m.clone(),
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Symmetrizes `cov` and, if rounding pushed its smallest eigenvalue to or just
/// below zero, adds `1e-12·trace` to the diagonal.
pub fn condition_covariance(cov: &mut DMatrix<f64>, context: &'static str) -> Result<()> {
    symmetrize(cov);
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite {
            context,
            min_eigenvalue: f64::NAN,
            matrix: cov.clone(),
        });
    }
    if cov.clone().cholesky().is_some() {
        return Ok(());
    }
    let trace = cov.trace();
    let min = min_eigenvalue(cov);
    if trace > 0.0 && min > -PSD_TOLERANCE * trace {
        let jitter = (JITTER * trace).max(-min * (1.0 + 1e-6));
        for i in 0..cov.nrows() {
            cov[(i, i)] += jitter;
        }
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            context,
            min_eigenvalue: min,
            matrix: cov.clone(),
        })
    }
}
