use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("step {step} is outside the on-pitch interval of player {player}")]
    OutOfInterval { player: u32, step: u32 },

    #[error("no ball-touch events in match; ball position cannot be derived")]
    NoBracket,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no boundary path available")]
    NoPath,

    #[error("enclosing-polygon walk did not close within {budget} steps")]
    OpenBoundary { budget: usize },

    #[error("polygon is not simple")]
    NonSimple,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("coverage mismatch: {0}")]
    Coverage(String),

    #[error("too few examples: {0}")]
    TooFewExamples(String),

    #[error("label {label} outside 1..={k}")]
    LabelRange { label: usize, k: usize },

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn schema(line: usize, message: impl Into<String>) -> Self {
        Error::Schema {
            line,
            message: message.into(),
        }
    }
}
