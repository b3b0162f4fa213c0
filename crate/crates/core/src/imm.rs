//! Interacting multiple model estimator over a bank of motion models sharing
//! the 8-dimensional extended state.
//!
//! One cycle is mix → predict → likelihood → update → mode update → combine.
//! The mode likelihood of each model is the average log-likelihood of the
//! scan's pseudo-measurements, evaluated by the unscented transform on the
//! model's predicted belief, so it does not depend on how many points the
//! scan holds.
//!
//! The CV model carries the turn rate without using it. Before mixing, its
//! turn rate is overwritten with the one held by the turning models, so a
//! stale rate cannot circulate through the mixing step.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::MotionModel;
use crate::error::{Error, Result};
use crate::linalg::condition_covariance;
use crate::measurement::MeasurementScan;
use crate::moments::idx;
use crate::ukf::{point_innovation, ukf_update_scan, GaussianBelief, UtParams};

const STARVATION_LIMIT: f64 = 1e-300;
/// Lower bound applied to every mode probability before renormalizing.
pub const MODE_FLOOR: f64 = 1e-6;

/// Mode probabilities and the row-stochastic Markov transition matrix
/// (`transition[i][j]` is the probability of switching from mode `i` to `j`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub probabilities: Vec<f64>,
    pub transition: Vec<Vec<f64>>,
}

impl ModeSet {
    pub fn new(probabilities: Vec<f64>, transition: Vec<Vec<f64>>) -> Result<Self> {
        let modes = Self {
            probabilities,
            transition,
        };
        modes.validate()?;
        Ok(modes)
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::InvalidParameter("mode set is empty".into()));
        }
        let total: f64 = self.probabilities.iter().sum();
        if self.probabilities.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "mode probabilities must be non-negative and sum to 1, got {:?}",
                self.probabilities
            )));
        }
        if self.transition.len() != n || self.transition.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidParameter(format!("transition matrix must be {n}x{n}")));
        }
        for (i, row) in self.transition.iter().enumerate() {
            let s: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "row {i} of the transition matrix must be non-negative and sum to 1, got {row:?}"
                )));
            }
        }
        Ok(())
    }

    /// Predicted mode probabilities `c̄_j = Σ_i p_ij μ_i`.
    pub fn predicted(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| (0..n).map(|i| self.transition[i][j] * self.probabilities[i]).sum())
            .collect()
    }
}

/// Scan likelihood of one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodReport {
    /// `Σ_l log N(0; μ_v,l, σ²_v,l)`.
    pub log_lik: f64,
    /// `exp(log_lik / n)` for a scan of `n` points; 1 for an empty scan.
    pub avg_lik: f64,
    pub points: usize,
}

impl LikelihoodReport {
    pub fn avg_log_lik(&self) -> f64 {
        if self.points == 0 {
            0.0
        } else {
            self.log_lik / self.points as f64
        }
    }
}

/// Mixes the model-conditioned beliefs. Returns the mixed beliefs and the
/// predicted mode probabilities `c̄`.
pub fn imm_mix(beliefs: &[GaussianBelief], modes: &ModeSet) -> Result<(Vec<GaussianBelief>, Vec<f64>)> {
    let n = modes.len();
    if beliefs.len() != n {
        return Err(Error::Dimension(format!("{} beliefs for {n} modes", beliefs.len())));
    }
    let dim = beliefs[0].dim();
    if beliefs.iter().any(|b| b.dim() != dim) {
        return Err(Error::Dimension("mode beliefs differ in dimension".into()));
    }
    let cbar = modes.predicted();
    let mut mixed = Vec::with_capacity(n);
    for j in 0..n {
        if !(cbar[j] >= STARVATION_LIMIT) {
            return Err(Error::ModeStarvation {
                mode: j,
                predicted: cbar[j],
            });
        }
        let weights: Vec<f64> = (0..n)
            .map(|i| modes.transition[i][j] * modes.probabilities[i] / cbar[j])
            .collect();
        mixed.push(mixture(beliefs, &weights)?);
    }
    Ok((mixed, cbar))
}

/// Moment-matched Gaussian of a weighted mixture.
pub fn mixture(beliefs: &[GaussianBelief], weights: &[f64]) -> Result<GaussianBelief> {
    let dim = beliefs[0].dim();
    let mut mean = DVector::zeros(dim);
    for (b, w) in beliefs.iter().zip(weights) {
        if *w != 0.0 {
            mean.axpy(*w, &b.mean, 1.0);
        }
    }
    let mut cov = DMatrix::zeros(dim, dim);
    for (b, w) in beliefs.iter().zip(weights) {
        if *w != 0.0 {
            let d = &b.mean - &mean;
            cov += (&b.cov + &d * d.transpose()) * *w;
        }
    }
    condition_covariance(&mut cov, "imm mixture")?;
    Ok(GaussianBelief { mean, cov })
}

/// Average log-likelihood of `scan` under the predicted belief of one model.
pub fn model_likelihood(
    predicted: &GaussianBelief,
    scan: &MeasurementScan,
    params: &UtParams,
) -> Result<LikelihoodReport> {
    let mut log_lik = 0.0;
    for (index, z) in scan.points.iter().enumerate() {
        let inn = point_innovation(predicted, z, &scan.noise, params)?;
        let var = inn.variance;
        if !(var > 0.0) || !var.is_finite() {
            return Err(Error::NonPositiveVariance { index, variance: var });
        }
        log_lik += -inn.mean * inn.mean / (2.0 * var) - (2.0 * PI * var).sqrt().ln();
    }
    let points = scan.len();
    let report = LikelihoodReport {
        log_lik,
        avg_lik: 1.0,
        points,
    };
    Ok(LikelihoodReport {
        avg_lik: report.avg_log_lik().exp(),
        ..report
    })
}

/// Updates mode probabilities `μ_j ∝ Λ̄_j c̄_j` (in the log domain), floors
/// them at [`MODE_FLOOR`] and renormalizes.
pub fn update_mode_probabilities(cbar: &[f64], reports: &[LikelihoodReport]) -> Result<Vec<f64>> {
    let logs: Vec<f64> = reports
        .iter()
        .zip(cbar)
        .map(|(r, c)| r.avg_log_lik() + c.ln())
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::LikelihoodUnderflow);
    }
    let mut mu: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = mu.iter().sum();
    for m in mu.iter_mut() {
        *m = (*m / total).max(MODE_FLOOR);
    }
    let total: f64 = mu.iter().sum();
    for m in mu.iter_mut() {
        *m /= total;
    }
    Ok(mu)
}

/// Replaces the turn rate of every CV belief with the moment-matched turn
/// rate of the CT beliefs (weighted by mode probability) and drops its
/// cross-covariance. Does nothing unless both kinds of model are present.
pub fn share_turn_rate(beliefs: &mut [GaussianBelief], models: &[MotionModel], probabilities: &[f64]) {
    let w = idx::OMEGA;
    let turning: Vec<usize> = (0..models.len())
        .filter(|&j| matches!(models[j], MotionModel::Ct(_)) && beliefs[j].dim() > w)
        .collect();
    let total: f64 = turning.iter().map(|&j| probabilities[j]).sum();
    if turning.is_empty() || turning.len() == models.len() || !(total > 0.0) {
        return;
    }
    let mean: f64 = turning
        .iter()
        .map(|&j| probabilities[j] * beliefs[j].mean[w])
        .sum::<f64>()
        / total;
    let var: f64 = turning
        .iter()
        .map(|&j| probabilities[j] * (beliefs[j].cov[(w, w)] + (beliefs[j].mean[w] - mean).powi(2)))
        .sum::<f64>()
        / total;
    for (b, m) in beliefs.iter_mut().zip(models) {
        if matches!(m, MotionModel::Cv(_)) && b.dim() > w {
            b.mean[w] = mean;
            b.cov.row_mut(w).fill(0.0);
            b.cov.column_mut(w).fill(0.0);
            b.cov[(w, w)] = var;
        }
    }
}

/// Result of one IMM cycle.
#[derive(Debug, Clone)]
pub struct ImmOutput {
    pub combined: GaussianBelief,
    pub likelihoods: Vec<LikelihoodReport>,
}

/// IMM estimator state.
#[derive(Debug, Clone)]
pub struct Imm {
    pub models: Vec<MotionModel>,
    pub beliefs: Vec<GaussianBelief>,
    pub modes: ModeSet,
    pub ut: UtParams,
}

impl Imm {
    /// Every model starts from the same belief.
    pub fn new(models: Vec<MotionModel>, initial: GaussianBelief, modes: ModeSet, ut: UtParams) -> Result<Self> {
        modes.validate()?;
        if models.len() != modes.len() {
            return Err(Error::InvalidParameter(format!(
                "{} models but {} mode probabilities",
                models.len(),
                modes.len()
            )));
        }
        let beliefs = vec![initial; models.len()];
        Ok(Self {
            models,
            beliefs,
            modes,
            ut,
        })
    }

    /// One full cycle. Prediction is skipped when `dt == 0`.
    pub fn step(&mut self, scan: &MeasurementScan, dt: f64) -> Result<ImmOutput> {
        share_turn_rate(&mut self.beliefs, &self.models, &self.modes.probabilities);
        let (mixed, cbar) = imm_mix(&self.beliefs, &self.modes)?;
        let mut updated = Vec::with_capacity(self.models.len());
        let mut reports = Vec::with_capacity(self.models.len());
        for (model, belief) in self.models.iter().zip(mixed) {
            let predicted = if dt > 0.0 {
                model.predict(&belief, dt, &self.ut)?
            } else {
                belief
            };
            reports.push(model_likelihood(&predicted, scan, &self.ut)?);
            updated.push(ukf_update_scan(&predicted, scan, &self.ut)?);
        }
        let mu = update_mode_probabilities(&cbar, &reports)?;
        let combined = mixture(&updated, &mu)?;
        self.beliefs = updated;
        self.modes.probabilities = mu;
        Ok(ImmOutput {
            combined,
            likelihoods: reports,
        })
    }
}
