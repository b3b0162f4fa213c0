//! Unscented transform and the single-model filter with sequential
//! per-point measurement updates.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::dynamics::MotionModel;
use crate::error::{Error, Result};
use crate::linalg::{condition_covariance, sqrt_psd, symmetrize};
use crate::measurement::{
    noise_poly_moments_unchecked, pseudo_measurement_raw, MeasurementScan, NoiseSpec, SCALE_MEAN, SCALE_VARIANCE,
};
use crate::moments::{ExtendedState, STATE_DIM};

/// Scaling parameters of the unscented transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UtParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

impl UtParams {
    pub fn new(alpha: f64, beta: f64, kappa: f64) -> Result<Self> {
        let p = Self { alpha, beta, kappa };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) || !self.beta.is_finite() || !self.kappa.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "UT parameters require alpha in (0, 1], got {self:?}"
            )));
        }
        Ok(())
    }

    /// `λ = α²(n + κ) − n`.
    pub fn lambda(&self, n: usize) -> f64 {
        let n = n as f64;
        self.alpha * self.alpha * (n + self.kappa) - n
    }

    /// Returns `(W0_mean, W0_cov, W_i)` for an `n`-dimensional input.
    pub fn weights(&self, n: usize) -> Result<(f64, f64, f64)> {
        let lambda = self.lambda(n);
        let denom = n as f64 + lambda;
        if denom.abs() < 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "n + lambda vanishes for n = {n} and {self:?}"
            )));
        }
        let w0m = lambda / denom;
        let w0c = w0m + (1.0 - self.alpha * self.alpha + self.beta);
        Ok((w0m, w0c, 0.5 / denom))
    }
}

/// Mean and covariance of a Gaussian state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    /// Checks dimensions and symmetrizes the covariance. The covariance must
    /// be positive semidefinite up to `1e-10·trace`.
    pub fn new(mean: DVector<f64>, mut cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::Dimension(format!(
                "mean has {n} entries but covariance is {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        symmetrize(&mut cov);
        let trace = cov.trace();
        let min = crate::linalg::min_eigenvalue(&cov);
        if !(min > -1e-10 * trace.abs()) {
            return Err(Error::NotPositiveDefinite {
                context: "GaussianBelief::new",
                min_eigenvalue: min,
                matrix: cov,
            });
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Interprets the leading entries as an [`ExtendedState`].
    pub fn state(&self) -> ExtendedState {
        ExtendedState::from_slice(self.mean.as_slice())
    }

    /// Appends independent Gaussian components with the given means and variances.
    pub fn augmented(&self, means: &[f64], variances: &[f64]) -> Self {
        let n = self.dim();
        let m = means.len();
        let mut mean = DVector::zeros(n + m);
        mean.rows_mut(0, n).copy_from(&self.mean);
        let mut cov = DMatrix::zeros(n + m, n + m);
        cov.view_mut((0, 0), (n, n)).copy_from(&self.cov);
        for (k, (&mu, &var)) in means.iter().zip(variances).enumerate() {
            mean[n + k] = mu;
            cov[(n + k, n + k)] = var;
        }
        Self { mean, cov }
    }
}

/// Sigma points stored column-wise, with their weights.
#[derive(Debug, Clone)]
pub struct SigmaPoints {
    pub points: DMatrix<f64>,
    pub mean_weights: Vec<f64>,
    pub cov_weights: Vec<f64>,
}

impl SigmaPoints {
    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.points.nrows();
        &self.points.as_slice()[i * n..(i + 1) * n]
    }
}

pub fn sigma_points(belief: &GaussianBelief, params: &UtParams) -> Result<SigmaPoints> {
    let n = belief.dim();
    let (w0m, w0c, wi) = params.weights(n)?;
    let scaled = &belief.cov * (n as f64 + params.lambda(n));
    let root = sqrt_psd(&scaled, "sigma_points")?;

    let mut points = DMatrix::zeros(n, 2 * n + 1);
    points.column_mut(0).copy_from(&belief.mean);
    for i in 0..n {
        let col = root.column(i);
        points.column_mut(1 + i).copy_from(&(&belief.mean + col));
        points.column_mut(1 + n + i).copy_from(&(&belief.mean - col));
    }
    let mut mean_weights = vec![wi; 2 * n + 1];
    let mut cov_weights = vec![wi; 2 * n + 1];
    mean_weights[0] = w0m;
    cov_weights[0] = w0c;
    Ok(SigmaPoints {
        points,
        mean_weights,
        cov_weights,
    })
}

/// Output of an unscented transform.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub belief: GaussianBelief,
    /// `Σ W_i^(c) (X_i − x̄)(Y_i − ȳ)ᵀ`.
    pub cross_cov: DMatrix<f64>,
}

/// Propagates `belief` through `f` with the unscented transform.
pub fn unscented_transform<F>(belief: &GaussianBelief, params: &UtParams, f: F) -> Result<Transformed>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let sigma = sigma_points(belief, params)?;
    let ys: Vec<DVector<f64>> = (0..sigma.len()).map(|i| f(sigma.point(i))).collect();
    let m = ys[0].len();
    let n = belief.dim();

    let mut mean = DVector::zeros(m);
    for (w, y) in sigma.mean_weights.iter().zip(&ys) {
        mean.axpy(*w, y, 1.0);
    }
    let mut cov = DMatrix::zeros(m, m);
    let mut cross = DMatrix::zeros(n, m);
    for (i, y) in ys.iter().enumerate() {
        let w = sigma.cov_weights[i];
        let dy = y - &mean;
        let dx = DVector::from_column_slice(sigma.point(i)) - &belief.mean;
        cov.ger(w, &dy, &dy, 1.0);
        cross.ger(w, &dx, &dy, 1.0);
    }
    condition_covariance(&mut cov, "unscented_transform")?;
    Ok(Transformed {
        belief: GaussianBelief { mean, cov },
        cross_cov: cross,
    })
}

/// Predicted mean, variance and state cross-covariance of one pseudo-measurement.
#[derive(Debug, Clone)]
pub struct Innovation {
    pub mean: f64,
    pub variance: f64,
    pub cross: DVector<f64>,
}

/// Propagates the state augmented with the noise polynomial `f` and the scale
/// `s` through the pseudo-measurement for point `z`.
pub fn point_innovation(
    belief: &GaussianBelief,
    z: &Vector2<f64>,
    noise: &NoiseSpec,
    params: &UtParams,
) -> Result<Innovation> {
    let n = belief.dim();
    if n != STATE_DIM {
        return Err(Error::Dimension(format!(
            "measurement update expects a {STATE_DIM}-dimensional state, got {n}"
        )));
    }
    let state = belief.state();
    state.moments.validate()?;
    let (f_mean, f_var) = noise_poly_moments_unchecked(z, &state, noise);
    let aug = belief.augmented(&[f_mean, SCALE_MEAN], &[f_var, SCALE_VARIANCE]);
    let sigma = sigma_points(&aug, params)?;

    let vs: Vec<f64> = (0..sigma.len())
        .map(|i| pseudo_measurement_raw(z, sigma.point(i)))
        .collect();
    let mean: f64 = sigma.mean_weights.iter().zip(&vs).map(|(w, v)| w * v).sum();
    let mut variance = 0.0;
    let mut cross = DVector::zeros(n);
    for (i, v) in vs.iter().enumerate() {
        let w = sigma.cov_weights[i];
        let dv = v - mean;
        variance += w * dv * dv;
        let x = sigma.point(i);
        for k in 0..n {
            cross[k] += w * (x[k] - aug.mean[k]) * dv;
        }
    }
    Ok(Innovation { mean, variance, cross })
}

/// Scalar Kalman update of `belief` against an observed pseudo-measurement of 0.
fn apply_innovation(belief: &mut GaussianBelief, inn: &Innovation) -> Result<()> {
    let gain = &inn.cross / inn.variance;
    belief.mean.axpy(-inn.mean, &gain, 1.0);
    belief.cov.ger(-1.0, &gain, &inn.cross, 1.0);
    condition_covariance(&mut belief.cov, "ukf_update_scan")
}

/// Processes every point of `scan` in order, one scalar update per point.
///
/// A point whose update would move the moment mean out of the valid cone is
/// skipped; see [`ukf_update_scan_counted`] for the number of such points.
pub fn ukf_update_scan(belief: &GaussianBelief, scan: &MeasurementScan, params: &UtParams) -> Result<GaussianBelief> {
    ukf_update_scan_counted(belief, scan, params).map(|(b, _)| b)
}

/// As [`ukf_update_scan`], also returning how many points were skipped.
pub fn ukf_update_scan_counted(
    belief: &GaussianBelief,
    scan: &MeasurementScan,
    params: &UtParams,
) -> Result<(GaussianBelief, usize)> {
    let mut out = belief.clone();
    let mut skipped = 0;
    for (index, z) in scan.points.iter().enumerate() {
        let step = point_innovation(&out, z, &scan.noise, params).and_then(|inn| {
            if !(inn.variance > 0.0) || !inn.variance.is_finite() {
                return Err(Error::NonPositiveVariance {
                    index,
                    variance: inn.variance,
                });
            }
            let mut next = out.clone();
            apply_innovation(&mut next, &inn)?;
            Ok(next)
        });
        let next = step.map_err(|e| Error::UpdateFailed {
            index,
            source: Box::new(e),
        })?;
        if next.state().moments.validate().is_ok() {
            out = next;
        } else {
            skipped += 1;
        }
    }
    Ok((out, skipped))
}

/// Single-model filter: prediction under one motion model followed by the
/// sequential scan update.
#[derive(Debug, Clone)]
pub struct Ukf {
    pub model: MotionModel,
    pub ut: UtParams,
    pub belief: GaussianBelief,
}

impl Ukf {
    pub fn new(model: MotionModel, ut: UtParams, belief: GaussianBelief) -> Self {
        Self { model, ut, belief }
    }

    /// Predicts over `dt` (skipped when `dt == 0`) and absorbs `scan`.
    pub fn step(&mut self, scan: &MeasurementScan, dt: f64) -> Result<&GaussianBelief> {
        let predicted = if dt > 0.0 {
            self.model.predict(&self.belief, dt, &self.ut)?
        } else {
            self.belief.clone()
        };
        self.belief = ukf_update_scan(&predicted, scan, &self.ut)?;
        Ok(&self.belief)
    }
}
