//! Ellipse parameters and their normalized centered second-order moments.
//!
//! An ellipse with semi-axes `a1 >= a2`, orientation `alpha` and centroid
//! `(xc, yc)` has area-normalized central moments
//!
//! ```text
//! n20 = (a1² cos²α + a2² sin²α) / 4
//! n02 = (a1² sin²α + a2² cos²α) / 4
//! n11 = (a1² − a2²) sin 2α / 8
//! ```
//!
//! and the triple `[n11, n20, n02]` together with the centroid is a minimal,
//! unambiguous parametrization of the ellipse.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which `n11` is treated as zero when recovering
/// the orientation.
const AXIS_ALIGNED_EPS: f64 = 1e-12;
/// Relative threshold on `n20·n02 − n11²` for a usable moment matrix.
const DEGENERATE_EPS: f64 = 1e-12;

/// Index of each component in the 8-dimensional filter state
/// `[n11, n20, n02, xc, vx, yc, vy, omega]`.
pub mod idx {
    pub const N11: usize = 0;
    pub const N20: usize = 1;
    pub const N02: usize = 2;
    pub const X: usize = 3;
    pub const VX: usize = 4;
    pub const Y: usize = 5;
    pub const VY: usize = 6;
    pub const OMEGA: usize = 7;
}

/// Dimension of the common filter state.
pub const STATE_DIM: usize = 8;

/// Normalized centered second-order moments of an elliptic region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub n11: f64,
    pub n20: f64,
    pub n02: f64,
}

impl MomentVector {
    /// Builds a moment vector, rejecting matrices that are not positive definite.
    pub fn new(n11: f64, n20: f64, n02: f64) -> Result<Self> {
        let m = Self { n11, n20, n02 };
        m.validate()?;
        Ok(m)
    }

    /// Moments of a circle of radius `r`.
    pub fn circle(r: f64) -> Self {
        let n = r * r / 4.0;
        Self {
            n11: 0.0,
            n20: n,
            n02: n,
        }
    }

    /// `n20·n02 − n11²`, the determinant of the moment matrix.
    pub fn determinant(&self) -> f64 {
        self.n20 * self.n02 - self.n11 * self.n11
    }

    pub fn trace(&self) -> f64 {
        self.n20 + self.n02
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self.n11.is_finite() && self.n20.is_finite() && self.n02.is_finite();
        let tr = self.trace();
        if !finite || self.n20 <= 0.0 || self.n02 <= 0.0 || self.determinant() <= DEGENERATE_EPS * tr * tr {
            return Err(Error::InvalidMoments {
                n11: self.n11,
                n20: self.n20,
                n02: self.n02,
            });
        }
        Ok(())
    }

    /// `ρ = 1 / (4 (n20·n02 − n11²))`, the scale of the implicit ellipse form.
    pub fn rho(&self) -> f64 {
        1.0 / (4.0 * self.determinant())
    }

    /// Area `4π√(n20·n02 − n11²) = π·a1·a2`.
    pub fn area(&self) -> f64 {
        4.0 * PI * self.determinant().sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.n11, self.n20, self.n02]
    }

    /// Nearest moment matrix (in Frobenius norm) whose smaller eigenvalue is
    /// at least `min_ratio` times the larger one. `None` when the larger
    /// eigenvalue is not positive, since no ellipse is close then.
    pub fn project_valid(&self, min_ratio: f64) -> Option<Self> {
        let mean = 0.5 * (self.n20 + self.n02);
        let half = 0.5 * (self.n20 - self.n02);
        let r = half.hypot(self.n11);
        let big = mean + r;
        if !(big > 0.0) || !big.is_finite() {
            return None;
        }
        let small = (mean - r).max(min_ratio * big);
        if r == 0.0 {
            return Some(Self::circle(2.0 * big.sqrt()));
        }
        // Eigenvector of the larger eigenvalue is (cos t, sin t) with
        // cos 2t = half / r and sin 2t = n11 / r.
        let (c2, s2) = (half / r, self.n11 / r);
        let m = 0.5 * (big + small);
        let d = 0.5 * (big - small);
        Some(Self {
            n11: d * s2,
            n20: m + d * c2,
            n02: m - d * c2,
        })
    }
}

/// An ellipse in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseShape {
    /// Semi-major axis.
    pub a1: f64,
    /// Semi-minor axis.
    pub a2: f64,
    /// Orientation of the major axis in `(−π/2, π/2]`.
    pub alpha: f64,
    pub centroid: Vector2<f64>,
}

impl EllipseShape {
    /// Builds an ellipse, swapping the axes if needed so that `a1 >= a2` and
    /// wrapping the orientation into `(−π/2, π/2]`.
    pub fn new(a1: f64, a2: f64, alpha: f64, centroid: Vector2<f64>) -> Result<Self> {
        if !(a1 > 0.0 && a2 > 0.0 && a1.is_finite() && a2.is_finite() && alpha.is_finite()) {
            return Err(Error::InvalidEllipse(format!(
                "axes must be positive and finite, got a1={a1}, a2={a2}, alpha={alpha}"
            )));
        }
        let (a1, a2, alpha) = if a1 >= a2 {
            (a1, a2, alpha)
        } else {
            (a2, a1, alpha + FRAC_PI_2)
        };
        Ok(Self {
            a1,
            a2,
            alpha: normalize_orientation(alpha),
            centroid,
        })
    }

    pub fn circle(r: f64, centroid: Vector2<f64>) -> Result<Self> {
        Self::new(r, r, 0.0, centroid)
    }

    pub fn area(&self) -> f64 {
        PI * self.a1 * self.a2
    }

    pub fn moments(&self) -> MomentVector {
        ellipse_to_moments(self)
    }

    /// Point on the boundary at parametric angle `phi`.
    pub fn boundary_point(&self, phi: f64) -> Vector2<f64> {
        let (s, c) = self.alpha.sin_cos();
        let u = self.a1 * phi.cos();
        let v = self.a2 * phi.sin();
        self.centroid + Vector2::new(c * u - s * v, s * u + c * v)
    }
}

/// Wraps an angle into `(−π/2, π/2]`; an ellipse is symmetric under a half turn.
pub fn normalize_orientation(alpha: f64) -> f64 {
    let mut a = alpha.rem_euclid(PI);
    if a > FRAC_PI_2 {
        a -= PI;
    }
    a
}

/// Recovers semi-axes and orientation from the moments.
pub fn moments_to_ellipse(m: &MomentVector, centroid: Vector2<f64>) -> Result<EllipseShape> {
    m.validate()?;
    let MomentVector { n11, n20, n02 } = *m;
    let root = ((n20 - n02).powi(2) + 4.0 * n11 * n11).sqrt();
    let a1_sq = 2.0 * (n02 + n20 + root);
    // a1²·a2² = 16 (n20·n02 − n11²); avoids cancellation in n02 + n20 − root.
    let a2_sq = 16.0 * m.determinant() / a1_sq;

    let alpha = if n11.abs() < AXIS_ALIGNED_EPS * (n20 + n02) {
        if n20 >= n02 {
            0.0
        } else {
            FRAC_PI_2
        }
    } else {
        let t = (n02 - n20 + root) / (2.0 * n11);
        t.atan()
    };

    Ok(EllipseShape {
        a1: a1_sq.sqrt(),
        a2: a2_sq.sqrt(),
        alpha: normalize_orientation(alpha),
        centroid,
    })
}

pub fn ellipse_to_moments(e: &EllipseShape) -> MomentVector {
    let (s, c) = e.alpha.sin_cos();
    let a1_sq = e.a1 * e.a1;
    let a2_sq = e.a2 * e.a2;
    MomentVector {
        n11: (a1_sq - a2_sq) * (2.0 * e.alpha).sin() / 8.0,
        n20: (a1_sq * c * c + a2_sq * s * s) / 4.0,
        n02: (a1_sq * s * s + a2_sq * c * c) / 4.0,
    }
}

/// Evaluates `ρ(n02·x̄² + n20·ȳ² − 2·n11·x̄·ȳ)`, the squared scale of the
/// concentric ellipse passing through `point`.
pub fn implicit_value(point: &Vector2<f64>, moments: &MomentVector, centroid: &Vector2<f64>) -> f64 {
    implicit_raw(point.x, point.y, moments.as_array(), centroid.x, centroid.y)
}

/// Unchecked implicit form used inside sigma-point propagation, where
/// individual sigma points may leave the valid moment cone.
#[inline]
pub(crate) fn implicit_raw(x: f64, y: f64, [n11, n20, n02]: [f64; 3], xc: f64, yc: f64) -> f64 {
    let dx = x - xc;
    let dy = y - yc;
    let rho = 1.0 / (4.0 * (n20 * n02 - n11 * n11));
    rho * (n02 * dx * dx + n20 * dy * dy - 2.0 * n11 * dx * dy)
}

pub fn area(m: &MomentVector) -> f64 {
    m.area()
}

/// Closed-region membership test.
pub fn contains(e: &EllipseShape, point: &Vector2<f64>) -> bool {
    implicit_value(point, &e.moments(), &e.centroid) <= 1.0 + 1e-12
}

/// Kinematic and extent state of an elliptic target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub moments: MomentVector,
    pub pos: Vector2<f64>,
    pub vel: Vector2<f64>,
    /// Turn rate; carried but unused by the constant-velocity model.
    pub omega: f64,
}

impl ExtendedState {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.moments.n11,
            self.moments.n20,
            self.moments.n02,
            self.pos.x,
            self.vel.x,
            self.pos.y,
            self.vel.y,
            self.omega,
        ])
    }

    /// Reads the leading 8 entries of a state vector. Moment validity is not
    /// checked here.
    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            moments: MomentVector {
                n11: v[idx::N11],
                n20: v[idx::N20],
                n02: v[idx::N02],
            },
            pos: Vector2::new(v[idx::X], v[idx::Y]),
            vel: Vector2::new(v[idx::VX], v[idx::VY]),
            omega: v[idx::OMEGA],
        }
    }

    pub fn ellipse(&self) -> Result<EllipseShape> {
        moments_to_ellipse(&self.moments, self.pos)
    }

    pub fn implicit_value(&self, point: &Vector2<f64>) -> f64 {
        implicit_value(point, &self.moments, &self.pos)
    }
}
