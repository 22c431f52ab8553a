use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("requested rank {requested} exceeds matrix dimension {available}")]
    RankTooLarge { requested: usize, available: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Lanczos iteration did not converge after {iterations} steps (last residual {residual:.3e})")]
    LanczosNoConvergence { iterations: usize, residual: f64 },

    #[error("operator is not positive definite: curvature {curvature:.3e} along a direction of norm {direction_norm:.3e}")]
    IndefiniteOperator { curvature: f64, direction_norm: f64 },

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {relative_residual:.3e})")]
    CgNoConvergence {
        iterations: usize,
        relative_residual: f64,
        /// Relative residual after each iteration.
        trace: Vec<f64>,
    },

    #[error("spectral condition violated: {what} = {value:.6} must be < 1")]
    SpectralCondition { what: String, value: f64 },

    #[error("residual check failed: {what} = {value:.3e}")]
    Residual { what: String, value: f64 },

    #[error("secular equation failed: {0}")]
    Secular(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::LanczosNoConvergence { .. }
                | Error::IndefiniteOperator { .. }
                | Error::CgNoConvergence { .. }
                | Error::SpectralCondition { .. }
                | Error::Residual { .. }
                | Error::Secular(_)
        )
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
