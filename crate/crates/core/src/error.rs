use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("confidence parameter must lie in (0, 1), got {0}")]
    InvalidConfidence(f64),
    #[error("context or outcome out of range: {0}")]
    ContextOutOfRange(String),
    #[error("slate has no arms")]
    EmptySlate,
    #[error("payoff history is empty")]
    EmptyHistory,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("invalid means: {0}")]
    InvalidMeans(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("LP solver failed: {reason}")]
    LpNumerics {
        reason: String,
        /// Instance in the plain-text packing format, for triage.
        dump: Box<String>,
    },
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("unknown baseline `{0}`")]
    UnknownBaseline(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code: 2 for configuration problems, 3 for numeric
    /// failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ConfigInvalid(_)
            | Error::UnknownBaseline(_)
            | Error::InvalidDimension(_)
            | Error::InvalidConfidence(_)
            | Error::InvalidBudget(_)
            | Error::InvalidMeans(_)
            | Error::InvalidOptions(_)
            | Error::InvalidInput(_) => 2,
            Error::LpNumerics { .. } | Error::ContextOutOfRange(_) | Error::EmptySlate | Error::EmptyHistory => 3,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 1,
        }
    }
}
