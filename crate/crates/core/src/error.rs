//! Error taxonomy shared by every module and by the CLI.
//!
//! The variants map one-to-one onto the process exit codes used by the
//! `plaplace` binary: usage/parse problems (2), violated preconditions (3),
//! numerical failures (4) and failed embedded checks (5).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed command line or scenario input.
    #[error("usage: {0}")]
    Usage(String),

    /// Scenario or potential file did not parse.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },

    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An iterative method failed to converge or stepped below resolution.
    /// `at` carries the radius (or stage index cast to f64) that was reached.
    #[error("numeric failure: {msg} (reached {at:.6e})")]
    Numeric { msg: String, at: f64 },

    /// A boundary value problem has no positive solution in the bracket.
    #[error("solvability: {0}")]
    Solvability(String),

    /// An embedded scenario check did not pass.
    #[error("check failed: {0}")]
    CheckFailure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn numeric(msg: impl Into<String>, at: f64) -> Self {
        Error::Numeric {
            msg: msg.into(),
            at,
        }
    }

    /// Process exit code for the CLI. 0 is reserved for success.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Parse { .. } => 2,
            Error::Domain(_) | Error::Precondition(_) | Error::Solvability(_) => 3,
            Error::Numeric { .. } => 4,
            Error::CheckFailure(_) => 5,
            Error::Io(_) | Error::Json(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
