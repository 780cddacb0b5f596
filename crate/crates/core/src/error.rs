use thiserror::Error;

/// Broad failure classes. The CLI maps these onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorCategory {
    Usage,
    Precondition,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("point outside domain: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular evaluation: {0}")]
    Singularity(String),
    #[error("unsupported scenario: {0}")]
    Unsupported(String),
    #[error("unknown scenario id `{0}`")]
    UnknownScenario(String),
    #[error("Sobolev index {index} too low for restriction (needs > {bound})")]
    SobolevIndex { index: f64, bound: f64 },
    #[error("tolerance not reached: {0}")]
    Tolerance(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Argument(_) | Error::UnknownScenario(_) | Error::Parse(_) | Error::Json(_) => ErrorCategory::Usage,
            Error::Domain(_)
            | Error::Precondition(_)
            | Error::Unsupported(_)
            | Error::SobolevIndex { .. }
            | Error::GridMismatch(_)
            | Error::Singularity(_) => ErrorCategory::Precondition,
            Error::Tolerance(_) | Error::NonFinite(_) => ErrorCategory::Numerical,
            Error::Io(_) => ErrorCategory::Io,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
