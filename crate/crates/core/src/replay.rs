//! Tracking replay over recorded oriented bounding boxes.
//!
//! Each frame's box stands in for the target: points are drawn uniformly
//! inside it, perturbed with the configured noise, and fed to the configured
//! filter. Scoring uses the ellipse inscribed in the box.

use std::path::Path;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::measurement::MeasurementScan;
use crate::metrics::aggregate;
use crate::moments::{EllipseShape, ExtendedState};
use crate::parallel::{map_runs, Execution};
use crate::scenario::{track, ScenarioConfig, ScenarioOutput};
use crate::sim::{add_noise, run_rng, sample_target, Kinematics, Pose, TargetShape, TruthEpoch};

/// One labelled frame: box center, full width and height, and rotation in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBoxRecord {
    pub frame: u64,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl BoundingBoxRecord {
    fn shape(&self) -> TargetShape {
        TargetShape::Rectangle { w: self.w, h: self.h }
    }

    fn pose(&self) -> Pose {
        Pose {
            centroid: Vector2::new(self.cx, self.cy),
            orientation: self.theta,
        }
    }

    /// Ellipse whose full axes equal the box sides.
    pub fn inscribed_ellipse(&self) -> Result<EllipseShape> {
        EllipseShape::new(self.w / 2.0, self.h / 2.0, self.theta, Vector2::new(self.cx, self.cy))
    }
}

pub fn validate_records(records: &[BoundingBoxRecord]) -> Result<()> {
    if records.is_empty() {
        return Err(Error::config("<bbox>", "bounding-box log has no records"));
    }
    for (i, r) in records.iter().enumerate() {
        let finite = [r.cx, r.cy, r.w, r.h, r.theta].iter().all(|v| v.is_finite());
        if !finite || !(r.w > 0.0) || !(r.h > 0.0) {
            return Err(Error::config(
                format!("<bbox> row {}", i + 1),
                format!("box must be finite with positive width and height, got {r:?}"),
            ));
        }
        if i > 0 && r.frame <= records[i - 1].frame {
            return Err(Error::config(
                format!("<bbox> row {}", i + 1),
                format!("frame {} does not follow frame {}", r.frame, records[i - 1].frame),
            ));
        }
    }
    Ok(())
}

pub fn read_bboxes(path: &Path) -> Result<Vec<BoundingBoxRecord>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::config("<bbox>", format!("cannot read {}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let expected = ["frame", "cx", "cy", "w", "h", "theta"];
    if headers.iter().map(str::trim).ne(expected) {
        return Err(Error::config(
            "<bbox>",
            format!(
                "header must be `{}`, got `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let records = reader
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::config(format!("<bbox> row {}", i + 1), e.to_string())))
        .collect::<Result<Vec<BoundingBoxRecord>>>()?;
    validate_records(&records)?;
    Ok(records)
}

pub fn write_bboxes(path: &Path, records: &[BoundingBoxRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Boxes tracing a simulated rectangle target, one per truth epoch.
pub fn boxes_from_truth(shape: &TargetShape, truth: &[TruthEpoch], period: f64) -> Result<Vec<BoundingBoxRecord>> {
    let TargetShape::Rectangle { w, h } = *shape else {
        return Err(Error::InvalidParameter("bounding boxes need a rectangle target".into()));
    };
    Ok(truth
        .iter()
        .map(|t| BoundingBoxRecord {
            frame: (t.time / period).round() as u64,
            cx: t.state.pos.x,
            cy: t.state.pos.y,
            w,
            h,
            theta: t.orientation,
        })
        .collect())
}

/// Truth sequence implied by the boxes; velocities are finite differences.
pub fn truth_from_boxes(records: &[BoundingBoxRecord], period: f64) -> Result<Vec<TruthEpoch>> {
    validate_records(records)?;
    let f0 = records[0].frame;
    let time = |r: &BoundingBoxRecord| (r.frame - f0) as f64 * period;
    let center = |r: &BoundingBoxRecord| Vector2::new(r.cx, r.cy);
    let n = records.len();
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (a, b) = match n {
                1 => (i, i),
                _ if i == 0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            let vel = if a == b {
                Vector2::zeros()
            } else {
                (center(&records[b]) - center(&records[a])) / (time(&records[b]) - time(&records[a]))
            };
            Ok(TruthEpoch {
                time: time(r),
                state: ExtendedState {
                    moments: r.inscribed_ellipse()?.moments(),
                    pos: center(r),
                    vel,
                    omega: 0.0,
                },
                orientation: r.theta,
            })
        })
        .collect()
}

/// Monte Carlo replay of `records` with the filter and scan law of `cfg`.
pub fn replay_bboxes(records: &[BoundingBoxRecord], cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let truth = truth_from_boxes(records, cfg.period)?;
    let spec = cfg.scan_spec()?;
    let regions = records
        .iter()
        .map(|r| r.inscribed_ellipse().map(|e| Region::from_ellipse(&e)))
        .collect::<Result<Vec<_>>>()?;
    let start = Kinematics {
        pos: truth[0].state.pos,
        vel: truth[0].state.vel,
        orientation: truth[0].orientation,
    };
    let runs = map_runs(cfg.runs, exec, |run| {
        let mut rng = run_rng(cfg.seed, run as u64);
        let scans: Vec<MeasurementScan> = records
            .iter()
            .zip(&truth)
            .map(|(r, t)| {
                let n = spec.draw_count(&mut rng);
                let points = sample_target(&r.shape(), &r.pose(), n, &mut rng)
                    .into_iter()
                    .map(|p| add_noise(p, &spec.noise, &mut rng))
                    .collect();
                MeasurementScan::new(t.time, points, spec.noise)
            })
            .collect();
        track(cfg, &truth, &regions, &scans, &start)
    })?;
    let report = aggregate(&runs)?;
    Ok(ScenarioOutput { report, runs })
}
