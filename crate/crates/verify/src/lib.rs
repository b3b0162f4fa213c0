//! Helpers for the acceptance target: reference figures with tolerances and
//! per-segment mode readings for the maneuvering scenarios.

use std::fmt::Write as _;

use imtrack::metrics::RunResult;
use imtrack::sim::SegmentKind;

/// A reference value with a symmetric tolerance.
#[derive(Debug, Clone, Copy)]
pub struct Target {
    pub value: f64,
    pub tol: f64,
}

impl Target {
    pub const fn new(value: f64, tol: f64) -> Self {
        Self { value, tol }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tol
    }
}

/// One measured figure compared against its target.
#[derive(Debug, Clone)]
pub struct Figure {
    pub label: String,
    pub got: f64,
    pub target: Target,
}

impl Figure {
    pub fn new(label: impl Into<String>, got: f64, target: Target) -> Self {
        Self {
            label: label.into(),
            got,
            target,
        }
    }

    pub fn ok(&self) -> bool {
        self.target.contains(self.got)
    }
}

/// Whether every figure is in tolerance, and a one-line summary marking the misses.
pub fn summarize(figures: &[Figure]) -> (bool, String) {
    let mut s = String::new();
    for (i, f) in figures.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let mark = if f.ok() { "" } else { " (miss)" };
        let _ = write!(
            s,
            "{} {:.3} vs {:.2}±{:.2}{mark}",
            f.label, f.got, f.target.value, f.target.tol
        );
    }
    (figures.iter().all(Figure::ok), s)
}

/// How a segment's mode probability history is reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reading {
    /// Mean over the epochs inside the segment.
    Mean,
    /// Largest value inside the segment.
    Peak,
}

/// For each segment `(kind, start, end)`, whether the matching mode's
/// probability over the epochs in `(start, end]` reads above 0.5. Mode 0 is
/// CV and mode 1 is CT.
pub fn segment_verdicts(run: &RunResult, windows: &[(SegmentKind, f64, f64)], reading: Reading) -> Vec<bool> {
    windows
        .iter()
        .map(|&(kind, start, end)| {
            let mode = match kind {
                SegmentKind::Cv => 0,
                SegmentKind::Ct => 1,
            };
            let values: Vec<f64> = run
                .times
                .iter()
                .zip(&run.modes)
                .filter(|(t, _)| **t > start && **t <= end)
                .map(|(_, mu)| mu[mode])
                .collect();
            if values.is_empty() {
                return false;
            }
            let v = match (reading, kind) {
                (Reading::Peak, SegmentKind::Ct) => values.iter().copied().fold(f64::MIN, f64::max),
                _ => values.iter().sum::<f64>() / values.len() as f64,
            };
            v > 0.5
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use imtrack::{ExtendedState, MomentVector};
    use nalgebra::Vector2;

    fn run(modes: &[[f64; 2]]) -> RunResult {
        let n = modes.len();
        let state = ExtendedState {
            moments: MomentVector::circle(1.0),
            pos: Vector2::zeros(),
            vel: Vector2::zeros(),
            omega: 0.0,
        };
        RunResult {
            times: (0..n).map(|k| k as f64).collect(),
            estimates: vec![state; n],
            truths: vec![state; n],
            ious: vec![0.0; n],
            modes: modes.iter().map(|m| m.to_vec()).collect(),
        }
    }

    #[test]
    fn windows_read_the_matching_mode() {
        let r = run(&[[0.5, 0.5], [0.9, 0.1], [0.8, 0.2], [0.4, 0.6], [0.9, 0.1], [0.2, 0.8]]);
        let windows = [(SegmentKind::Cv, 0.0, 2.0), (SegmentKind::Ct, 2.0, 5.0)];
        assert_eq!(segment_verdicts(&r, &windows, Reading::Mean), [true, false]);
        assert_eq!(segment_verdicts(&r, &windows, Reading::Peak), [true, true]);
        assert_eq!(
            segment_verdicts(&r, &[(SegmentKind::Ct, 9.0, 10.0)], Reading::Mean),
            [false]
        );
    }

    #[test]
    fn summary_flags_misses() {
        let (ok, text) = summarize(&[
            Figure::new("a", 0.9, Target::new(0.9, 0.05)),
            Figure::new("b", 0.5, Target::new(0.9, 0.05)),
        ]);
        assert!(!ok);
        assert!(text.contains("b 0.500 vs 0.90±0.05 (miss)"));
        assert!(!text.contains("a 0.900 vs 0.90±0.05 (miss)"));
    }
}
