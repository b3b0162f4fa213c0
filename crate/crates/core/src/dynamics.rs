//! Constant-velocity and coordinated-turn prediction of the extended state.
//!
//! Under pure translation the normalized centered moments are constant.
//! Under a coordinated turn at rate `ω` they obey `ṗ = A p` with
//!
//! ```text
//!     [  0    ω   −ω ]
//! A = [ −2ω   0    0 ]
//!     [  2ω   0    0 ]
//! ```
//!
//! whose exponential `M(ω, τ)` is a rotation of the moment matrix by `ωτ`.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::condition_covariance;
use crate::moments::{idx, ExtendedState, STATE_DIM};
use crate::ukf::{unscented_transform, GaussianBelief, UtParams};

/// Below this `|ω|·T` the coordinated-turn kinematics use their `ω → 0` limit.
const SMALL_TURN: f64 = 1e-8;
/// Variance floor for the turn rate carried inertly by the CV model.
const OMEGA_VARIANCE_FLOOR: f64 = 1e-12;
/// Smallest squared axis ratio a projected moment mean may have.
const MIN_AXIS_RATIO_SQ: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvNoiseParams {
    /// Power spectral density of the white-noise acceleration.
    pub q: f64,
    /// Process-noise covariance of `[n11, n20, n02]`.
    pub c_im: Matrix3<f64>,
}

impl CvNoiseParams {
    pub fn new(q: f64, c_im: Matrix3<f64>) -> Result<Self> {
        let p = Self { q, c_im };
        p.validate()?;
        Ok(p)
    }

    pub fn diagonal(q: f64, c_im: [f64; 3]) -> Result<Self> {
        Self::new(q, Matrix3::from_diagonal(&c_im.into()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 0.0) || !self.q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "q must be non-negative, got {}",
                self.q
            )));
        }
        if (self.c_im - self.c_im.transpose()).abs().max() > 1e-12 * self.c_im.abs().max().max(1.0) {
            return Err(Error::InvalidParameter("C_IM must be symmetric".into()));
        }
        let min = self.c_im.symmetric_eigenvalues().min();
        if min < -1e-12 * self.c_im.trace().abs().max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "C_IM must be positive semidefinite (min eigenvalue {min})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtNoiseParams {
    /// Variances of `[w_n11, w_n20, w_n02, a_x, a_y, w_omega]`.
    pub w_var: [f64; 6],
}

impl CtNoiseParams {
    pub fn new(w_var: [f64; 6]) -> Result<Self> {
        if w_var.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "CT noise variances must be non-negative, got {w_var:?}"
            )));
        }
        Ok(Self { w_var })
    }
}

/// Transition and process covariance of the 7-dimensional CV state
/// `[n11, n20, n02, x, vx, y, vy]`.
pub fn cv_transition(dt: f64, params: &CvNoiseParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut f = DMatrix::identity(7, 7);
    f[(3, 4)] = dt;
    f[(5, 6)] = dt;

    let cw = Matrix2::new(dt.powi(3) / 3.0, dt * dt / 2.0, dt * dt / 2.0, dt) * params.q;
    let mut c = DMatrix::zeros(7, 7);
    c.view_mut((0, 0), (3, 3)).copy_from(&params.c_im);
    c.view_mut((3, 3), (2, 2)).copy_from(&cw);
    c.view_mut((5, 5), (2, 2)).copy_from(&cw);
    (f, c)
}

/// Exact moment transition `exp(A τ)` for a turn at rate `omega`.
pub fn ct_moment_transition(omega: f64, tau: f64) -> Matrix3<f64> {
    let theta = omega * tau;
    let (s2, c2) = (2.0 * theta).sin_cos();
    let (s, c) = theta.sin_cos();
    let (ss, cc) = (s * s, c * c);
    Matrix3::new(
        c2,
        0.5 * s2,
        -0.5 * s2, //
        -s2,
        cc,
        ss, //
        s2,
        ss,
        cc,
    )
}

/// `(sin ωT / ω, (1 − cos ωT) / ω)` with the `ω → 0` limit.
fn turn_coefficients(omega: f64, dt: f64) -> (f64, f64, f64, f64) {
    let wt = omega * dt;
    let (s, c) = wt.sin_cos();
    if wt.abs() < SMALL_TURN {
        (dt, omega * dt * dt / 2.0, s, c)
    } else {
        let half = (0.5 * wt).sin();
        (s / omega, 2.0 * half * half / omega, s, c)
    }
}

/// Coordinated-turn kinematics over `[x, vx, y, vy, omega]`.
pub fn ct_kinematic_matrix(omega: f64, dt: f64) -> DMatrix<f64> {
    let (sw, cw, s, c) = turn_coefficients(omega, dt);
    DMatrix::from_row_slice(
        5,
        5,
        &[
            1.0, sw, 0.0, -cw, 0.0, //
            0.0, c, 0.0, -s, 0.0, //
            0.0, cw, 1.0, sw, 0.0, //
            0.0, s, 0.0, c, 0.0, //
            0.0, 0.0, 0.0, 0.0, 1.0,
        ],
    )
}

/// Noise gain `Γ = blockdiag(I₃, Γ_CT)`.
pub fn ct_noise_gain(dt: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(STATE_DIM, 6);
    for i in 0..3 {
        g[(i, i)] = 1.0;
    }
    g[(idx::X, 3)] = dt * dt / 2.0;
    g[(idx::VX, 3)] = dt;
    g[(idx::Y, 4)] = dt * dt / 2.0;
    g[(idx::VY, 4)] = dt;
    g[(idx::OMEGA, 5)] = dt;
    g
}

/// `(F_CT, Γ)` evaluated at the turn rate of `state`.
pub fn ct_transition(state: &ExtendedState, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut f = DMatrix::zeros(STATE_DIM, STATE_DIM);
    f.view_mut((0, 0), (3, 3))
        .copy_from(&ct_moment_transition(state.omega, dt));
    f.view_mut((3, 3), (5, 5))
        .copy_from(&ct_kinematic_matrix(state.omega, dt));
    (f, ct_noise_gain(dt))
}

/// Propagates one augmented point `[state(8), w(6)]` through the CT model.
fn ct_propagate(x: &[f64], dt: f64) -> DVector<f64> {
    let omega = x[idx::OMEGA];
    let m = ct_moment_transition(omega, dt);
    let (sw, cw, s, c) = turn_coefficients(omega, dt);
    let w = &x[STATE_DIM..];
    let (px, vx, py, vy) = (x[idx::X], x[idx::VX], x[idx::Y], x[idx::VY]);
    let half = dt * dt / 2.0;

    let mut out = DVector::zeros(STATE_DIM);
    for i in 0..3 {
        out[i] = m[(i, 0)] * x[0] + m[(i, 1)] * x[1] + m[(i, 2)] * x[2] + w[i];
    }
    out[idx::X] = px + sw * vx - cw * vy + half * w[3];
    out[idx::VX] = c * vx - s * vy + dt * w[3];
    out[idx::Y] = py + cw * vx + sw * vy + half * w[4];
    out[idx::VY] = s * vx + c * vy + dt * w[4];
    out[idx::OMEGA] = omega + dt * w[5];
    out
}

/// Motion model of one filter (or one IMM mode).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum MotionModel {
    Cv(CvNoiseParams),
    Ct(CtNoiseParams),
}

impl MotionModel {
    pub fn name(&self) -> &'static str {
        match self {
            MotionModel::Cv(_) => "cv",
            MotionModel::Ct(_) => "ct",
        }
    }

    /// Predicts `belief` (8-dimensional) forward by `dt`.
    ///
    /// CV is linear and propagated in closed form. CT is propagated by the
    /// unscented transform of the state augmented with the process noise.
    pub fn predict(&self, belief: &GaussianBelief, dt: f64, ut: &UtParams) -> Result<GaussianBelief> {
        if belief.dim() != STATE_DIM {
            return Err(Error::Dimension(format!(
                "prediction expects a {STATE_DIM}-dimensional state, got {}",
                belief.dim()
            )));
        }
        if !(dt >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be non-negative, got {dt}"
            )));
        }
        match self {
            MotionModel::Cv(params) => predict_cv(belief, dt, params),
            MotionModel::Ct(params) => predict_ct(belief, dt, params, ut),
        }
    }
}

fn predict_cv(belief: &GaussianBelief, dt: f64, params: &CvNoiseParams) -> Result<GaussianBelief> {
    let (f7, c7) = cv_transition(dt, params);
    let mut f = DMatrix::identity(STATE_DIM, STATE_DIM);
    f.view_mut((0, 0), (7, 7)).copy_from(&f7);
    let mut q = DMatrix::zeros(STATE_DIM, STATE_DIM);
    q.view_mut((0, 0), (7, 7)).copy_from(&c7);

    let mean = &f * &belief.mean;
    let mut cov = &f * &belief.cov * f.transpose() + q;
    let w = idx::OMEGA;
    cov[(w, w)] = cov[(w, w)].max(OMEGA_VARIANCE_FLOOR);
    condition_covariance(&mut cov, "predict (cv)")?;
    Ok(GaussianBelief { mean, cov })
}

fn predict_ct(belief: &GaussianBelief, dt: f64, params: &CtNoiseParams, ut: &UtParams) -> Result<GaussianBelief> {
    let aug = belief.augmented(&[0.0; 6], &params.w_var);
    let out = unscented_transform(&aug, ut, |x| ct_propagate(x, dt))?;
    let mut belief = out.belief;
    project_moments(&mut belief);
    Ok(belief)
}

/// Sigma points that leave the valid cone can drag the predicted mean moments
/// outside it too. Such a mean is moved to the nearest valid moment matrix;
/// the covariance is kept.
fn project_moments(belief: &mut GaussianBelief) {
    let m = belief.state().moments;
    if m.validate().is_ok() {
        return;
    }
    if let Some(p) = m.project_valid(MIN_AXIS_RATIO_SQ) {
        belief.mean[idx::N11] = p.n11;
        belief.mean[idx::N20] = p.n20;
        belief.mean[idx::N02] = p.n02;
    }
}
