use thiserror::Error;

/// Errors produced anywhere in the counting pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input text could not be decoded as an incidence matrix.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    /// Two sites overlap without nesting, so no perfect phylogeny exists.
    #[error("infinite-sites violation between sites {first} and {second}")]
    IsmViolation { first: String, second: String },
    /// Backtracking over node orderings explored more partial states than allowed.
    #[error("backtracking search exceeded its budget of {budget} partial states")]
    SearchBudgetExceeded { budget: u64 },
    /// Exhaustive enumeration produced more complete sequences than allowed.
    #[error("exact enumeration exceeded its budget of {budget} sequences")]
    BudgetExceeded { budget: u64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }
}
