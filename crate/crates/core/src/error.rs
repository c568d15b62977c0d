use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infinite Green function: {0}")]
    InfiniteGreen(String),

    #[error("Cholesky factorization failed at pivot {pivot} (value {value})")]
    Factorization { pivot: usize, value: f64 },

    #[error("series did not converge after {steps} steps (residual {residual:e})")]
    NonConvergence { steps: usize, residual: f64 },

    #[error("box too large for the exact oracle: {sites} sites (max {max})")]
    BoxTooLarge { sites: usize, max: usize },

    #[error("outside the regime covered by the bound: {0}")]
    OutOfRegime(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
