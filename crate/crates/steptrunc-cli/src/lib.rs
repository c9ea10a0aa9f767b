//! Library half of the benchmark harness: configuration parsing and the
//! experiment runners. The binary in `main.rs` is a thin dispatcher over
//! these, and the acceptance suite drives them directly.

pub mod config;
pub mod runner;

/// Harness-level failure, carrying the process exit code contract:
/// validation failures exit 2, runtime failures exit 3.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}
