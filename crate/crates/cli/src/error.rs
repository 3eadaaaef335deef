//! CLI error type and its mapping to exit codes.

use thiserror::Error;

/// Failures that abort a run before any invariant is evaluated.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("config schema violation: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Exit code for successful runs.
pub const EXIT_OK: u8 = 0;
/// Exit code for usage, schema and i/o errors.
pub const EXIT_USAGE: u8 = 1;
/// Exit code when a run completed but an asserted invariant failed.
pub const EXIT_INVARIANT: u8 = 2;
