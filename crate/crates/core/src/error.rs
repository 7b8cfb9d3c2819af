use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole of {function} at {at}")]
    Pole { function: &'static str, at: String },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("mode residual {residual:.3e} exceeds tolerance {tolerance:.1e} (s = {s})")]
    ResidualExceeded { s: usize, residual: f64, tolerance: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("test function needs degree {needed} but modes were built up to {available}")]
    Truncation { needed: usize, available: usize },

    #[error("input is not real-valued: {0}")]
    NonReal(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("missing entry: {0}")]
    MissingEntry(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("insufficient fit window: {0}")]
    InsufficientWindow(String),

    #[error("missing fixture: {0}")]
    MissingFixture(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
