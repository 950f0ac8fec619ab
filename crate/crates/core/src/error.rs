use thiserror::Error;

/// Errors raised by the numerical kernels and experiment runners.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    /// The shifted Lax operator `L_u + kappa` is not positive definite.
    #[error("kappa = {kappa} too small: L_u + kappa is not positive definite (lambda_min = {lambda_min})")]
    KappaTooSmall { kappa: f64, lambda_min: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("blow-up at t = {time}: sup-norm {norm:e} exceeds the abort threshold")]
    BlowUp { time: f64, norm: f64 },

    /// Parameters outside the range where the computation is reliable.
    #[error("parameter regime not supported: {0}")]
    Regime(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}
