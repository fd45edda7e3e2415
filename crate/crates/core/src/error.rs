use thiserror::Error;

/// Errors raised across the workbench.
///
/// `Structural` covers shape problems (qubit index out of range, dimension
/// mismatch), `Validation` covers bad values supplied by a caller, and
/// `Contract` covers violated preconditions between cooperating components.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("objective returned a non-finite value at evaluation {evaluation}")]
    NonFinite { evaluation: usize },
    #[error("solver did not converge: {0}")]
    Convergence(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
