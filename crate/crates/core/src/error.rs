use thiserror::Error;

/// Errors produced by the optimizer library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error at step {step}: {msg}")]
    Numeric { step: usize, msg: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported problem: {0}")]
    Unsupported(String),

    #[error("degenerate trajectory: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
