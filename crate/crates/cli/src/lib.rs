//! Support library for the `urn-ldp` binary: spec files, table emitters
//! and readers, the verification checks, and the deterministic thread
//! fan-out. Kept as a library so integration tests drive the exact code
//! the binary runs.

pub mod emit;
pub mod parallel;
pub mod spec_io;
pub mod verify;

/// CLI failure modes; each maps to a distinct exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("spec validation failed:\n{0}")]
    Validation(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}
