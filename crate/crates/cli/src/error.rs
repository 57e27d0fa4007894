use thiserror::Error;

/// Failures surfaced by the experiment runner, each with a fixed exit code:
/// 2 configuration, 3 numeric, 4 verification-contract violation.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("verification contract violated: {0}")]
    Contract(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Contract(_) => 4,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}
