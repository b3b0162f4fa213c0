//! Ground-truth trajectories, target shapes and noisy scan synthesis.

use std::f64::consts::PI;

use nalgebra::{Rotation2, Vector2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ellipse_polygon, rectangle, Region, ELLIPSE_VERTICES};
use crate::measurement::{MeasurementScan, NoiseSpec};
use crate::moments::{EllipseShape, ExtendedState, MomentVector};

/// Rigid target shape in its body frame, centered on its centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TargetShape {
    /// Ellipse with semi-axes `a1` (body x) and `a2` (body y).
    Ellipse { a1: f64, a2: f64 },
    /// Union of two concentric axis-aligned rectangles, each `[width, height]`.
    PlusSign {
        #[serde(deserialize_with = "crate::scenario::exact::array")]
        bar1: [f64; 2],
        #[serde(deserialize_with = "crate::scenario::exact::array")]
        bar2: [f64; 2],
    },
    /// Axis-aligned `w × h` rectangle.
    Rectangle { w: f64, h: f64 },
}

/// Centroid and body orientation of a shape in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub centroid: Vector2<f64>,
    pub orientation: f64,
}

impl Pose {
    fn world_point(&self, body: Vector2<f64>) -> Vector2<f64> {
        self.centroid + Rotation2::new(self.orientation) * body
    }
}

/// `(∫x², ∫y², area)` of a centered `w × h` rectangle.
fn rect_moments(w: f64, h: f64) -> (f64, f64, f64) {
    (w.powi(3) * h / 12.0, w * h.powi(3) / 12.0, w * h)
}

impl TargetShape {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            TargetShape::Ellipse { a1, a2 } => *a1 > 0.0 && *a2 > 0.0,
            TargetShape::Rectangle { w, h } => *w > 0.0 && *h > 0.0,
            TargetShape::PlusSign { bar1, bar2 } => bar1.iter().chain(bar2).all(|v| *v > 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "shape dimensions must be positive: {self:?}"
            )))
        }
    }

    fn overlap(&self) -> Option<[f64; 2]> {
        match self {
            TargetShape::PlusSign { bar1, bar2 } => Some([bar1[0].min(bar2[0]), bar1[1].min(bar2[1])]),
            _ => None,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            TargetShape::Ellipse { a1, a2 } => PI * a1 * a2,
            TargetShape::Rectangle { w, h } => w * h,
            TargetShape::PlusSign { bar1, bar2 } => {
                let o = self.overlap().unwrap();
                bar1[0] * bar1[1] + bar2[0] * bar2[1] - o[0] * o[1]
            }
        }
    }

    /// Normalized centered moments in the body frame.
    pub fn body_moments(&self) -> MomentVector {
        match *self {
            TargetShape::Ellipse { a1, a2 } => MomentVector {
                n11: 0.0,
                n20: a1 * a1 / 4.0,
                n02: a2 * a2 / 4.0,
            },
            TargetShape::Rectangle { w, h } => MomentVector {
                n11: 0.0,
                n20: w * w / 12.0,
                n02: h * h / 12.0,
            },
            TargetShape::PlusSign { bar1, bar2 } => {
                let o = self.overlap().unwrap();
                let (x1, y1, s1) = rect_moments(bar1[0], bar1[1]);
                let (x2, y2, s2) = rect_moments(bar2[0], bar2[1]);
                let (xo, yo, so) = rect_moments(o[0], o[1]);
                let area = s1 + s2 - so;
                MomentVector {
                    n11: 0.0,
                    n20: (x1 + x2 - xo) / area,
                    n02: (y1 + y2 - yo) / area,
                }
            }
        }
    }

    /// World-frame moments of the shape at `orientation`.
    pub fn moments_at(&self, orientation: f64) -> MomentVector {
        let b = self.body_moments();
        let (s, c) = orientation.sin_cos();
        let (s2, c2) = (2.0 * orientation).sin_cos();
        MomentVector {
            n11: 0.5 * s2 * (b.n20 - b.n02) + c2 * b.n11,
            n20: c * c * b.n20 + s * s * b.n02 - s2 * b.n11,
            n02: s * s * b.n20 + c * c * b.n02 + s2 * b.n11,
        }
    }

    pub fn contains_body(&self, p: &Vector2<f64>) -> bool {
        match *self {
            TargetShape::Ellipse { a1, a2 } => (p.x / a1).powi(2) + (p.y / a2).powi(2) <= 1.0,
            TargetShape::Rectangle { w, h } => p.x.abs() <= w / 2.0 && p.y.abs() <= h / 2.0,
            TargetShape::PlusSign { bar1, bar2 } => {
                let inside = |b: [f64; 2]| p.x.abs() <= b[0] / 2.0 && p.y.abs() <= b[1] / 2.0;
                inside(bar1) || inside(bar2)
            }
        }
    }

    fn half_extents(&self) -> Vector2<f64> {
        match *self {
            TargetShape::Ellipse { a1, a2 } => Vector2::new(a1, a2),
            TargetShape::Rectangle { w, h } => Vector2::new(w, h) / 2.0,
            TargetShape::PlusSign { bar1, bar2 } => Vector2::new(bar1[0].max(bar2[0]), bar1[1].max(bar2[1])) / 2.0,
        }
    }

    /// Disjoint convex pieces of the body-frame region.
    fn body_pieces(&self) -> Vec<Vec<Vector2<f64>>> {
        match *self {
            TargetShape::Ellipse { a1, a2 } => {
                let e = EllipseShape::new(a1, a2, 0.0, Vector2::zeros()).expect("validated shape");
                vec![ellipse_polygon(&e, ELLIPSE_VERTICES)]
            }
            TargetShape::Rectangle { w, h } => vec![rectangle(0.0, 0.0, w, h)],
            TargetShape::PlusSign { bar1, bar2 } => {
                let mut pieces = vec![rectangle(0.0, 0.0, bar1[0], bar1[1])];
                let (w1, h1) = (bar1[0] / 2.0, bar1[1] / 2.0);
                let (w2, h2) = (bar2[0] / 2.0, bar2[1] / 2.0);
                // bar2 minus bar1: strips above/below bar1, then strips left/right of it.
                if h2 > h1 {
                    let h = h2 - h1;
                    pieces.push(rectangle(0.0, h1 + h / 2.0, bar2[0], h));
                    pieces.push(rectangle(0.0, -h1 - h / 2.0, bar2[0], h));
                }
                if w2 > w1 {
                    let w = w2 - w1;
                    let hh = 2.0 * h1.min(h2);
                    pieces.push(rectangle(w1 + w / 2.0, 0.0, w, hh));
                    pieces.push(rectangle(-w1 - w / 2.0, 0.0, w, hh));
                }
                pieces
            }
        }
    }

    /// World-frame region at `pose`.
    pub fn region(&self, pose: &Pose) -> Region {
        Region::new(
            self.body_pieces()
                .into_iter()
                .map(|p| p.into_iter().map(|v| pose.world_point(v)).collect())
                .collect(),
        )
    }

    /// The ellipse whose moments equal the shape's.
    pub fn equivalent_ellipse(&self, pose: &Pose) -> EllipseShape {
        let m = self.body_moments();
        EllipseShape::new(2.0 * m.n20.sqrt(), 2.0 * m.n02.sqrt(), pose.orientation, pose.centroid)
            .expect("validated shape")
    }
}

/// Draws `n` points uniformly from the shape's interior at `pose`.
pub fn sample_target<R: Rng + ?Sized>(shape: &TargetShape, pose: &Pose, n: usize, rng: &mut R) -> Vec<Vector2<f64>> {
    let mut out = Vec::with_capacity(n);
    match *shape {
        TargetShape::Ellipse { a1, a2 } => {
            for _ in 0..n {
                let r = rng.random::<f64>().sqrt();
                let phi = 2.0 * PI * rng.random::<f64>();
                out.push(pose.world_point(Vector2::new(a1 * r * phi.cos(), a2 * r * phi.sin())));
            }
        }
        TargetShape::PlusSign { .. } | TargetShape::Rectangle { .. } => {
            let half = shape.half_extents();
            while out.len() < n {
                let p = Vector2::new(
                    (2.0 * rng.random::<f64>() - 1.0) * half.x,
                    (2.0 * rng.random::<f64>() - 1.0) * half.y,
                );
                if shape.contains_body(&p) {
                    out.push(pose.world_point(p));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnDirection {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Cv,
    Ct,
}

/// One piece of a piecewise CV/CT trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySegment {
    pub kind: SegmentKind,
    pub duration: f64,
    /// Turn-rate magnitude in degrees per time unit (CT only).
    #[serde(default)]
    pub turn_rate_deg: f64,
    #[serde(default)]
    pub direction: Option<TurnDirection>,
}

impl TrajectorySegment {
    pub fn cv(duration: f64) -> Self {
        Self {
            kind: SegmentKind::Cv,
            duration,
            turn_rate_deg: 0.0,
            direction: None,
        }
    }

    pub fn ct(duration: f64, turn_rate_deg: f64, direction: TurnDirection) -> Self {
        Self {
            kind: SegmentKind::Ct,
            duration,
            turn_rate_deg,
            direction: Some(direction),
        }
    }

    /// Signed turn rate in rad per time unit (left is positive).
    pub fn omega(&self) -> f64 {
        match self.kind {
            SegmentKind::Cv => 0.0,
            SegmentKind::Ct => {
                let sign = match self.direction.unwrap_or(TurnDirection::Left) {
                    TurnDirection::Left => 1.0,
                    TurnDirection::Right => -1.0,
                };
                sign * self.turn_rate_deg.to_radians()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "segment duration must be positive, got {}",
                self.duration
            )));
        }
        if self.kind == SegmentKind::Ct && !(self.turn_rate_deg >= 0.0) {
            return Err(Error::InvalidParameter(
                "turn rate magnitude must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Kinematic truth at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub pos: Vector2<f64>,
    pub vel: Vector2<f64>,
    /// Body orientation of the shape.
    pub orientation: f64,
}

impl Kinematics {
    /// Exact constant-turn-rate motion over `tau`; the body rotates with the velocity.
    fn advance(&self, omega: f64, tau: f64) -> Self {
        let theta = omega * tau;
        let (s, c) = theta.sin_cos();
        let (sw, cw) = if theta.abs() < 1e-12 {
            (tau, 0.5 * omega * tau * tau)
        } else {
            (s / omega, 2.0 * (0.5 * theta).sin().powi(2) / omega)
        };
        let v = self.vel;
        Self {
            pos: self.pos + Vector2::new(sw * v.x - cw * v.y, cw * v.x + sw * v.y),
            vel: Vector2::new(c * v.x - s * v.y, s * v.x + c * v.y),
            orientation: self.orientation + theta,
        }
    }
}

/// Ground truth at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthEpoch {
    pub time: f64,
    pub state: ExtendedState,
    pub orientation: f64,
}

impl TruthEpoch {
    pub fn pose(&self) -> Pose {
        Pose {
            centroid: self.state.pos,
            orientation: self.orientation,
        }
    }
}

/// Total duration of a segment list.
pub fn trajectory_duration(segments: &[TrajectorySegment]) -> f64 {
    segments.iter().map(|s| s.duration).sum()
}

/// Start and end time of every segment.
pub fn segment_windows(segments: &[TrajectorySegment]) -> Vec<(SegmentKind, f64, f64)> {
    let mut t = 0.0;
    segments
        .iter()
        .map(|s| {
            let w = (s.kind, t, t + s.duration);
            t += s.duration;
            w
        })
        .collect()
}

/// Samples the noise-free trajectory every `period`, starting at time 0 and
/// ending at the last epoch not after the total duration.
pub fn generate_truth(
    shape: &TargetShape,
    initial: &Kinematics,
    segments: &[TrajectorySegment],
    period: f64,
) -> Result<Vec<TruthEpoch>> {
    if !(period > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "period must be positive, got {period}"
        )));
    }
    for s in segments {
        s.validate()?;
    }
    let total = trajectory_duration(segments);
    let epochs = (total / period + 1e-9).floor() as usize + 1;

    // Segment start times and the kinematics at each boundary.
    let mut starts = Vec::with_capacity(segments.len());
    let mut state_at = Vec::with_capacity(segments.len());
    let mut t = 0.0;
    let mut k = *initial;
    for s in segments {
        starts.push(t);
        state_at.push(k);
        k = k.advance(s.omega(), s.duration);
        t += s.duration;
    }

    let mut out = Vec::with_capacity(epochs);
    for e in 0..epochs {
        let time = e as f64 * period;
        // segment active on [start, start + duration)
        let seg = starts.iter().rposition(|&s| s <= time + 1e-9);
        let (kin, omega) = match seg {
            Some(i) => {
                let kin = state_at[i].advance(segments[i].omega(), time - starts[i]);
                let active = if time + 1e-9 >= starts[i] + segments[i].duration {
                    0.0
                } else {
                    segments[i].omega()
                };
                (kin, active)
            }
            None => (*initial, 0.0),
        };
        out.push(TruthEpoch {
            time,
            state: ExtendedState {
                moments: shape.moments_at(kin.orientation),
                pos: kin.pos,
                vel: kin.vel,
                omega,
            },
            orientation: kin.orientation,
        });
    }
    Ok(out)
}

/// Number of measurements drawn per scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountLaw {
    Fixed(usize),
    Poisson(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub count: CountLaw,
    pub noise: NoiseSpec,
    pub period: f64,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        match self.count {
            CountLaw::Fixed(0) => return Err(Error::InvalidParameter("fixed count must be positive".into())),
            CountLaw::Poisson(m) if !(m > 0.0) => {
                return Err(Error::InvalidParameter(format!(
                    "Poisson mean must be positive, got {m}"
                )))
            }
            _ => {}
        }
        if !(self.period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "period must be positive, got {}",
                self.period
            )));
        }
        NoiseSpec::new(self.noise.sigma_x2, self.noise.sigma_y2).map(|_| ())
    }

    pub fn draw_count<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self.count {
            CountLaw::Fixed(n) => n,
            CountLaw::Poisson(mean) => Poisson::new(mean).expect("validated mean").sample(rng) as usize,
        }
    }
}

/// Adds zero-mean Gaussian noise with the given per-axis variances.
pub fn add_noise<R: Rng + ?Sized>(p: Vector2<f64>, noise: &NoiseSpec, rng: &mut R) -> Vector2<f64> {
    let nx: f64 = StandardNormal.sample(rng);
    let ny: f64 = StandardNormal.sample(rng);
    p + Vector2::new(nx * noise.sigma_x2.sqrt(), ny * noise.sigma_y2.sqrt())
}

/// One scan per truth epoch.
pub fn generate_scans<R: Rng + ?Sized>(
    truth: &[TruthEpoch],
    shape: &TargetShape,
    spec: &ScanSpec,
    rng: &mut R,
) -> Vec<MeasurementScan> {
    truth
        .iter()
        .map(|epoch| {
            let n = spec.draw_count(rng);
            let points = sample_target(shape, &epoch.pose(), n, rng)
                .into_iter()
                .map(|p| add_noise(p, &spec.noise, rng))
                .collect();
            MeasurementScan::new(epoch.time, points, spec.noise)
        })
        .collect()
}

/// Portable generator for Monte Carlo run `run` of an experiment seeded with `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}
