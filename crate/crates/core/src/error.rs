use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the crate.
///
/// Variants are grouped so the command-line front end can map each one onto
/// a stable process exit code (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// A distribution routine was called outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Coefficients imply a parameter outside the admissible region
    /// (e.g. ξ(x) ≤ -1/2 under the identity link).
    #[error("invalid parameter region: {0}")]
    InvalidRegion(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Input data problem; `line` is the 1-based line in the source file when known.
    #[error("data error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Data { line: Option<u64>, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn data(message: impl Into<String>) -> Self {
        Error::Data {
            line: None,
            message: message.into(),
        }
    }

    pub fn data_at(line: u64, message: impl Into<String>) -> Self {
        Error::Data {
            line: Some(line),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Data { .. } | Error::Io { .. } => 3,
            Error::Domain(_) | Error::InvalidRegion(_) | Error::Numerical(_) => 4,
        }
    }
}
