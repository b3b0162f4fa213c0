//! Random-hypersurface pseudo-measurement built on the implicit moment form.
//!
//! A noisy point `z = z̄ + ν` is mapped to `v = g(z) − f − s²`, whose true
//! value is zero. `f` collects every term of `g(z̄)` that involves the sensor
//! noise `ν` and is replaced in the filter by a Gaussian with matched first
//! two moments. `s` is the random scale of the hypersurface through the
//! source point.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{implicit_raw, ExtendedState};

/// Mean of the Gaussian approximation of the hypersurface scale `s`.
pub const SCALE_MEAN: f64 = 2.0 / 3.0;
/// Variance of the Gaussian approximation of the hypersurface scale `s`.
pub const SCALE_VARIANCE: f64 = 1.0 / 18.0;

/// Per-axis variances of the additive Gaussian sensor noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma_x2: f64,
    pub sigma_y2: f64,
}

impl NoiseSpec {
    /// Zero variances are accepted as the noiseless limit.
    pub fn new(sigma_x2: f64, sigma_y2: f64) -> Result<Self> {
        if !(sigma_x2 >= 0.0 && sigma_y2 >= 0.0 && sigma_x2.is_finite() && sigma_y2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise variances must be finite and non-negative, got ({sigma_x2}, {sigma_y2})"
            )));
        }
        Ok(Self { sigma_x2, sigma_y2 })
    }

    pub fn isotropic(var: f64) -> Result<Self> {
        Self::new(var, var)
    }
}

/// A timestamped set of point measurements from one sensor scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementScan {
    pub time: f64,
    pub points: Vec<Vector2<f64>>,
    pub noise: NoiseSpec,
}

impl MeasurementScan {
    pub fn new(time: f64, points: Vec<Vector2<f64>>, noise: NoiseSpec) -> Self {
        Self { time, points, noise }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `g(z, p) − f − s²`. The observed value of this quantity is always zero.
pub fn pseudo_measurement(z: &Vector2<f64>, state: &ExtendedState, f_value: f64, s: f64) -> Result<f64> {
    state.moments.validate()?;
    Ok(state.implicit_value(z) - f_value - s * s)
}

/// Pseudo-measurement evaluated on a raw augmented sigma point
/// `[n11, n20, n02, xc, vx, yc, vy, omega, f, s]`.
#[inline]
pub(crate) fn pseudo_measurement_raw(z: &Vector2<f64>, x: &[f64]) -> f64 {
    let g = implicit_raw(z.x, z.y, [x[0], x[1], x[2]], x[3], x[5]);
    let f = x[8];
    let s = x[9];
    g - f - s * s
}

/// Mean and variance of the noise polynomial `f` at measurement `z`.
pub fn noise_poly_moments(z: &Vector2<f64>, state: &ExtendedState, noise: &NoiseSpec) -> Result<(f64, f64)> {
    state.moments.validate()?;
    Ok(noise_poly_moments_unchecked(z, state, noise))
}

pub(crate) fn noise_poly_moments_unchecked(z: &Vector2<f64>, state: &ExtendedState, noise: &NoiseSpec) -> (f64, f64) {
    let m = &state.moments;
    let (n11, n20, n02) = (m.n11, m.n20, m.n02);
    let rho = m.rho();
    let (sx2, sy2) = (noise.sigma_x2, noise.sigma_y2);
    let dx = z.x - state.pos.x;
    let dy = z.y - state.pos.y;

    let mean = rho * (n02 * sx2 + n20 * sy2);
    let lx = n02 * dx - n11 * dy;
    let ly = n20 * dy - n11 * dx;
    let variance = rho
        * rho
        * (2.0 * n02 * n02 * sx2 * sx2
            + 2.0 * n20 * n20 * sy2 * sy2
            + 4.0 * n11 * n11 * sx2 * sy2
            + 4.0 * lx * lx * sx2
            + 4.0 * ly * ly * sy2);
    (mean, variance)
}

/// Evaluates the noise polynomial for one noise draw `nu`.
pub fn noise_poly_sample(z: &Vector2<f64>, state: &ExtendedState, nu: &Vector2<f64>) -> f64 {
    let m = &state.moments;
    let (n11, n20, n02) = (m.n11, m.n20, m.n02);
    let dx = z.x - state.pos.x;
    let dy = z.y - state.pos.y;
    let (vx, vy) = (nu.x, nu.y);
    m.rho()
        * (vx * vx * n02
            + vy * vy * n20
            + 2.0 * vx * vy * n11
            + 2.0 * (n02 * vx - n11 * vy) * dx
            + 2.0 * (n20 * vy - n11 * vx) * dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{EllipseShape, MomentVector};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn state_from(e: &EllipseShape) -> ExtendedState {
        ExtendedState {
            moments: e.moments(),
            pos: e.centroid,
            vel: Vector2::zeros(),
            omega: 0.0,
        }
    }

    #[test]
    fn pseudo_measurement_landmarks() {
        let e = EllipseShape::new(3.0, 1.0, 0.7, Vector2::new(1.0, 2.0)).unwrap();
        let st = state_from(&e);
        assert_eq!(pseudo_measurement(&e.centroid, &st, 0.0, 0.0).unwrap(), 0.0);
        let b = e.boundary_point(0.9);
        assert!(pseudo_measurement(&b, &st, 0.0, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn raw_matches_checked() {
        let e = EllipseShape::new(3.0, 1.0, 0.7, Vector2::new(1.0, 2.0)).unwrap();
        let st = state_from(&e);
        let z = Vector2::new(2.5, 1.0);
        let mut x = st.to_vector().as_slice().to_vec();
        x.extend([0.3, 0.8]);
        let checked = pseudo_measurement(&z, &st, 0.3, 0.8).unwrap();
        assert_relative_eq!(pseudo_measurement_raw(&z, &x), checked, epsilon = 1e-14);
    }

    #[test]
    fn noiseless_poly_is_zero() {
        let e = EllipseShape::new(3.0, 1.0, 0.7, Vector2::new(1.0, 2.0)).unwrap();
        let st = state_from(&e);
        let noise = NoiseSpec::new(0.0, 0.0).unwrap();
        assert_eq!(
            noise_poly_moments(&Vector2::new(5.0, 1.0), &st, &noise).unwrap(),
            (0.0, 0.0)
        );
        assert_eq!(noise_poly_sample(&Vector2::new(5.0, 1.0), &st, &Vector2::zeros()), 0.0);
    }

    #[test]
    fn circle_radius_two_at_centroid() {
        let st = ExtendedState {
            moments: MomentVector::circle(2.0),
            pos: Vector2::zeros(),
            vel: Vector2::zeros(),
            omega: 0.0,
        };
        let (mean, var) = noise_poly_moments(&Vector2::zeros(), &st, &NoiseSpec::isotropic(1.0).unwrap()).unwrap();
        assert_relative_eq!(mean, 0.5, epsilon = 1e-15);
        assert_relative_eq!(var, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn quadratic_part_is_even_in_noise() {
        let e = EllipseShape::new(3.0, 1.0, 0.7, Vector2::new(1.0, 2.0)).unwrap();
        let st = state_from(&e);
        let nu = Vector2::new(0.3, -0.2);
        let a = noise_poly_sample(&e.centroid, &st, &nu);
        let b = noise_poly_sample(&e.centroid, &st, &(-nu));
        assert_relative_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn rejects_invalid_moments() {
        let st = ExtendedState {
            moments: MomentVector {
                n11: 2.0,
                n20: 1.0,
                n02: 1.0,
            },
            pos: Vector2::zeros(),
            vel: Vector2::zeros(),
            omega: 0.0,
        };
        assert!(pseudo_measurement(&Vector2::zeros(), &st, 0.0, 0.0).is_err());
        assert!(noise_poly_moments(&Vector2::zeros(), &st, &NoiseSpec::isotropic(1.0).unwrap()).is_err());
        assert!(NoiseSpec::new(-1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn mean_independent_of_point_and_variance_bounded(
            a1 in 0.5f64..10.0, ratio in 0.1f64..1.0, alpha in -3.0f64..3.0,
            zx in -20.0f64..20.0, zy in -20.0f64..20.0,
            sx2 in 0.01f64..4.0, sy2 in 0.01f64..4.0,
        ) {
            let e = EllipseShape::new(a1, a1 * ratio, alpha, Vector2::new(0.5, -0.5)).unwrap();
            let st = state_from(&e);
            let noise = NoiseSpec::new(sx2, sy2).unwrap();
            let (m0, v0) = noise_poly_moments(&e.centroid, &st, &noise).unwrap();
            let (m1, v1) = noise_poly_moments(&Vector2::new(zx, zy), &st, &noise).unwrap();
            prop_assert!((m0 - m1).abs() <= 1e-12 * m0.abs());
            let rho = st.moments.rho();
            let m = st.moments;
            let floor = 2.0 * rho * rho * (m.n02 * m.n02 * sx2 * sx2 + m.n20 * m.n20 * sy2 * sy2);
            prop_assert!(v1 >= floor * (1.0 - 1e-12));
            prop_assert!(v0 >= floor * (1.0 - 1e-12));
        }

        #[test]
        fn circle_variance_rotation_invariant(r in 0.5f64..5.0, d in 0.0f64..10.0, phi in -3.0f64..3.0, var in 0.01f64..2.0) {
            let st = ExtendedState { moments: MomentVector::circle(r), pos: Vector2::zeros(), vel: Vector2::zeros(), omega: 0.0 };
            let noise = NoiseSpec::isotropic(var).unwrap();
            let (_, v0) = noise_poly_moments(&Vector2::new(d, 0.0), &st, &noise).unwrap();
            let (_, v1) = noise_poly_moments(&Vector2::new(d * phi.cos(), d * phi.sin()), &st, &noise).unwrap();
            prop_assert!((v0 - v1).abs() <= 1e-10 * v0);
        }
    }

    #[test]
    fn variance_floor_attained_at_centroid_when_axis_aligned() {
        let e = EllipseShape::new(3.0, 1.0, 0.0, Vector2::new(1.0, 2.0)).unwrap();
        let st = state_from(&e);
        let noise = NoiseSpec::new(0.3, 0.7).unwrap();
        let (_, v) = noise_poly_moments(&e.centroid, &st, &noise).unwrap();
        let m = st.moments;
        let rho = m.rho();
        let floor = 2.0 * rho * rho * (m.n02 * m.n02 * 0.09 + m.n20 * m.n20 * 0.49);
        assert_relative_eq!(v, floor, max_relative = 1e-12);
    }
}
