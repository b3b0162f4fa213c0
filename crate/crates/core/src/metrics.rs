//! Monte Carlo accuracy metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::moments::{EllipseShape, ExtendedState};

/// Intersection over union of two ellipses, via inscribed polygons.
pub fn iou(truth: &EllipseShape, estimate: &EllipseShape) -> f64 {
    iou_regions(&Region::from_ellipse(truth), &Region::from_ellipse(estimate))
}

pub fn iou_regions(a: &Region, b: &Region) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Per-epoch record of a single Monte Carlo run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub times: Vec<f64>,
    pub estimates: Vec<ExtendedState>,
    pub truths: Vec<ExtendedState>,
    pub ious: Vec<f64>,
    /// Mode probabilities per epoch, empty for single-model filters.
    pub modes: Vec<Vec<f64>>,
}

impl RunResult {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn check(&self) -> Result<()> {
        let n = self.times.len();
        if self.estimates.len() != n || self.truths.len() != n || self.ious.len() != n {
            return Err(Error::Misaligned(format!(
                "run has {} times, {} estimates, {} truths, {} IoU values",
                n,
                self.estimates.len(),
                self.truths.len(),
                self.ious.len()
            )));
        }
        if !self.modes.is_empty() && self.modes.len() != n {
            return Err(Error::Misaligned(format!(
                "run has {} times but {} mode rows",
                n,
                self.modes.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub runs: usize,
    pub times: Vec<f64>,
    pub iou: Vec<f64>,
    pub position_rmse: Vec<f64>,
    pub velocity_rmse: Vec<f64>,
    pub mean_iou: f64,
    pub mean_position_rmse: f64,
    pub mean_velocity_rmse: f64,
    /// Mean mode probabilities per epoch, empty for single-model filters.
    pub mode_probabilities: Vec<Vec<f64>>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Root of the run-averaged squared error, per epoch.
fn rmse_series(runs: &[RunResult], err: impl Fn(&ExtendedState, &ExtendedState) -> f64) -> Vec<f64> {
    let epochs = runs[0].len();
    (0..epochs)
        .map(|k| {
            let s: f64 = runs.iter().map(|r| err(&r.estimates[k], &r.truths[k]).powi(2)).sum();
            (s / runs.len() as f64).sqrt()
        })
        .collect()
}

fn check_runs(runs: &[RunResult]) -> Result<()> {
    let first = runs
        .first()
        .ok_or_else(|| Error::Misaligned("no runs to aggregate".into()))?;
    for (i, r) in runs.iter().enumerate() {
        r.check()?;
        if r.times != first.times {
            return Err(Error::Misaligned(format!("run {i} epoch times differ from run 0")));
        }
        if r.modes.is_empty() != first.modes.is_empty() {
            return Err(Error::Misaligned(format!(
                "run {i} mode history differs in shape from run 0"
            )));
        }
    }
    Ok(())
}

/// Per-epoch position RMSE over runs.
pub fn rmse(runs: &[RunResult]) -> Result<Vec<f64>> {
    check_runs(runs)?;
    Ok(rmse_series(runs, |e, t| (e.pos - t.pos).norm()))
}

pub fn aggregate(runs: &[RunResult]) -> Result<MetricsReport> {
    check_runs(runs)?;
    let n = runs.len() as f64;
    let epochs = runs[0].len();
    let iou: Vec<f64> = (0..epochs)
        .map(|k| runs.iter().map(|r| r.ious[k]).sum::<f64>() / n)
        .collect();
    let position_rmse = rmse_series(runs, |e, t| (e.pos - t.pos).norm());
    let velocity_rmse = rmse_series(runs, |e, t| (e.vel - t.vel).norm());
    let mode_probabilities = if runs[0].modes.is_empty() {
        Vec::new()
    } else {
        (0..epochs)
            .map(|k| {
                let m = runs[0].modes[k].len();
                (0..m)
                    .map(|j| runs.iter().map(|r| r.modes[k][j]).sum::<f64>() / n)
                    .collect()
            })
            .collect()
    };
    Ok(MetricsReport {
        runs: runs.len(),
        times: runs[0].times.clone(),
        mean_iou: mean(&iou),
        mean_position_rmse: mean(&position_rmse),
        mean_velocity_rmse: mean(&velocity_rmse),
        iou,
        position_rmse,
        velocity_rmse,
        mode_probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentVector;
    use approx::assert_relative_eq;
    use nalgebra::Vector2;

    fn state(x: f64, y: f64) -> ExtendedState {
        ExtendedState {
            moments: MomentVector::circle(1.0),
            pos: Vector2::new(x, y),
            vel: Vector2::zeros(),
            omega: 0.0,
        }
    }

    fn run(errs: &[(f64, f64)]) -> RunResult {
        RunResult {
            times: (0..errs.len()).map(|k| k as f64).collect(),
            estimates: errs.iter().map(|&(x, y)| state(x, y)).collect(),
            truths: errs.iter().map(|_| state(0.0, 0.0)).collect(),
            ious: vec![0.5; errs.len()],
            modes: Vec::new(),
        }
    }

    #[test]
    fn identical_ellipses() {
        let e = EllipseShape::new(3.0, 1.0, 0.2, Vector2::new(4.0, -1.0)).unwrap();
        assert_relative_eq!(iou(&e, &e), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn disjoint_ellipses() {
        let a = EllipseShape::new(1.0, 1.0, 0.0, Vector2::zeros()).unwrap();
        let b = EllipseShape::new(1.0, 1.0, 0.0, Vector2::new(5.0, 0.0)).unwrap();
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn nested_circles() {
        let a = EllipseShape::circle(1.0, Vector2::zeros()).unwrap();
        let b = EllipseShape::circle(2.0, Vector2::zeros()).unwrap();
        assert_relative_eq!(iou(&a, &b), 0.25, epsilon = 1e-4);
    }

    #[test]
    fn rmse_hand_computed() {
        let runs = vec![run(&[(3.0, 4.0), (0.0, 0.0)]), run(&[(0.0, 0.0), (0.0, 2.0)])];
        let r = rmse(&runs).unwrap();
        assert_relative_eq!(r[0], (25.0f64 / 2.0).sqrt());
        assert_relative_eq!(r[1], (4.0f64 / 2.0).sqrt());
        let rep = aggregate(&runs).unwrap();
        assert_relative_eq!(rep.mean_position_rmse, (r[0] + r[1]) / 2.0);
        assert_relative_eq!(rep.mean_iou, 0.5);
    }

    #[test]
    fn misaligned_runs_rejected() {
        let a = run(&[(0.0, 0.0), (0.0, 0.0)]);
        let b = run(&[(0.0, 0.0)]);
        assert!(matches!(rmse(&[a.clone(), b]), Err(Error::Misaligned(_))));
        let mut c = a.clone();
        c.ious.pop();
        assert!(matches!(aggregate(&[c]), Err(Error::Misaligned(_))));
        assert!(aggregate(&[]).is_err());
    }
}
