use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A premise has an empty subspace on `feature`; the owning rule should be dropped.
    #[error("unsatisfiable premise on feature `{feature}`")]
    UnsatisfiablePremise { feature: String },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("oracle failure at row {row}: {message}")]
    Oracle { row: usize, message: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code used by the command-line interface.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::UnsatisfiablePremise { .. }
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::Io(_) => 2,
            Error::Oracle { .. } => 3,
            _ => 1,
        }
    }
}
