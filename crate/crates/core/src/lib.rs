//! Extended object tracking with image moments.
//!
//! Targets are modelled as ellipses described by their second-order central
//! moments. A random-hypersurface pseudo-measurement ties each detected point
//! to the moment state, which is estimated with an unscented Kalman filter
//! processing points sequentially, or with an IMM over constant-velocity and
//! coordinated-turn dynamics.

// Checks like `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod imm;
pub mod linalg;
pub mod measurement;
pub mod metrics;
pub mod moments;
pub mod parallel;
pub mod replay;
pub mod scenario;
pub mod scenarios;
pub mod sim;
pub mod ukf;

pub use error::{Error, Result};
pub use moments::{EllipseShape, ExtendedState, MomentVector, STATE_DIM};
