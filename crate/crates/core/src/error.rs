use nalgebra::DMatrix;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("moment matrix is not positive definite (n11={n11:e}, n20={n20:e}, n02={n02:e})")]
    InvalidMoments { n11: f64, n20: f64, n02: f64 },

    #[error("invalid ellipse: {0}")]
    InvalidEllipse(String),

    #[error("{context}: matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e}); symmetrize or add jitter to the covariance")]
    NotPositiveDefinite {
        context: &'static str,
        min_eigenvalue: f64,
        matrix: DMatrix<f64>,
    },

    #[error("measurement update failed at point {index}")]
    UpdateFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("pseudo-measurement variance {variance:e} at point {index} is not positive")]
    NonPositiveVariance { index: usize, variance: f64 },

    #[error("mode {mode} starved: predicted probability {predicted:e}")]
    ModeStarvation { mode: usize, predicted: f64 },

    #[error("every model likelihood underflowed")]
    LikelihoodUnderflow,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("run results are misaligned: {0}")]
    Misaligned(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied configuration or input files.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidParameter(_) | Error::InvalidEllipse(_)
        )
    }

    /// True for failures inside the estimator: invalid moments, lost
    /// positive definiteness, degenerate likelihoods.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InvalidMoments { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::UpdateFailed { .. }
                | Error::NonPositiveVariance { .. }
                | Error::ModeStarvation { .. }
                | Error::LikelihoodUnderflow
                | Error::Dimension(_)
                | Error::Misaligned(_)
        )
    }
}
