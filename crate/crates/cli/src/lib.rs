//! Library half of the experiment runner: config parsing and the run /
//! compare / verify entry points the binary dispatches to.

// validations use `!(x > 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod runner;

pub use config::RunConfig;
pub use error::CliError;

use std::path::Path;

/// Loads a config file, rejecting unknown keys.
pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
