use thiserror::Error;

use crate::sdp::SdpStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("constraint matrices are linearly dependent (relative singular value {0:e})")]
    DependentConstraints(f64),

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    EigenNotConverged { iterations: usize, residuals: Vec<f64> },

    #[error("SDP solve ended with status {status:?}: {detail}")]
    SdpFailed { status: SdpStatus, detail: String },

    #[error("initial pool does not reproduce the target moments: worst residual {residual:e} at moment {index}")]
    InitialMoments { index: usize, residual: f64 },

    #[error("matrix has eigenvalue {0:e} below the PSD tolerance")]
    NotPsd(f64),

    #[error("monotonicity violated at iteration {iteration}: {detail}")]
    Monotonicity { iteration: usize, detail: String },

    #[error("empty pool")]
    EmptyPool,

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
