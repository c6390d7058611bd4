use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("unsupported dimension {0} (expected 1..=3)")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("not a signed permutation: {0}")]
    InvalidPermutation(String),
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("L is not an index-2 subgroup of the origin stabilizer")]
    InvalidL,
    #[error("element {0} does not move the origin to an adjacent vertex")]
    InvalidX(String),
    #[error("quotient graph is not the grid: direction {0} has no connection")]
    QuotientNotGrid(String),
    #[error("connection pattern is empty")]
    NoConnection,
    #[error("operation requires a saturated realization")]
    NotSaturated,
    #[error("ball of radius {0} does not contain the period box")]
    NeedsLargerRadius(usize),
    #[error("unknown group id {0}")]
    UnknownGroup(usize),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("inputs come from different runs: {0}")]
    StaleInput(String),
    #[error("checkpoint {path}: {msg}")]
    Checkpoint { path: String, msg: String },
    #[error("time budget exhausted after stage {after}; rerun to resume from checkpoints")]
    BudgetExhausted { after: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, column, msg: msg.into() }
    }

    /// Re-anchors a parse error to a file position.
    pub fn at(self, line: usize, column: usize) -> Self {
        match self {
            Error::Parse { msg, .. } => Error::Parse { line, column, msg },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
