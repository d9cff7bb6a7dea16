use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    /// Malformed input file; `location` is a field path or `line L, column C`.
    #[error("{}: {location}: {message}", path.display())]
    Parse { path: PathBuf, location: String, message: String },
    #[error("invalid input: {0}")]
    Validation(#[from] bregmax::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit code. Every error is an input error; failed checks are
    /// reported through [`crate::Output::passed`] instead.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
