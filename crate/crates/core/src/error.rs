use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("expected {expected} zeros in the cell, found {found}")]
    ZeroCount { expected: usize, found: usize },

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("zeros {first} and {second} are degenerate (separation {separation:e})")]
    Degenerate { first: usize, second: usize, separation: f64 },

    #[error("newton polish diverged at t = {t}: {reason}")]
    PolishDiverged { t: f64, reason: String },

    #[error("step too large: zero {path} jumped {jump} (limit {limit})")]
    StepTooLarge { path: usize, jump: f64, limit: f64 },

    #[error("classification failed: {0}")]
    Classification(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("malformed data: {0}")]
    Format(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
