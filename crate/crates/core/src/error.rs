use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants are grouped so that front ends can map them to exit codes:
/// configuration problems, numerical failures, and I/O or partial output.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameters or configuration outside the admissible region.
    #[error("configuration error: {0}")]
    Config(String),

    /// Several configuration constraints violated at once.
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),

    /// A caller broke an operation's precondition (for example querying an
    /// edge that is already present).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Argument outside the domain where a quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Non-finite or otherwise unusable intermediate value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A tree or graph description that does not have the required shape.
    #[error("malformed structure: {0}")]
    Structure(String),

    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("some cells did not complete: {0:?}")]
    Partial(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for this error: 2 for configuration problems,
    /// 3 for numerical failures, 4 for partial results, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::InvalidConfig(_)
            | Error::Precondition(_)
            | Error::Domain(_)
            | Error::Structure(_)
            | Error::Parse { .. } => 2,
            Error::Numeric(_) => 3,
            Error::Partial(_) => 4,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
