use thiserror::Error;

/// Errors raised anywhere in the decomposition stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MemdError {
    #[error("division domain error: denominator {0} is not positive")]
    Domain(f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-consecutive sample index: expected {expected}, got {got}")]
    Index { expected: usize, got: usize },

    #[error("input too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("singular tridiagonal system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("too few knots: need at least {needed}, got {got}")]
    TooFewKnots { needed: usize, got: usize },

    #[error("knot abscissae must be strictly increasing (violated at knot {0})")]
    NonMonotonicKnots(usize),

    #[error("query {x} outside the knot range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("too few extrema to build an envelope ({0} records)")]
    TooFewExtrema(usize),

    #[error("residue reached: no oscillatory content left to sift")]
    ResidueReached,

    #[error("stream already flushed")]
    Flushed,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("ragged rows: row {row} has {got} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("tone {frequency} Hz is not below the Nyquist frequency {nyquist} Hz")]
    NyquistViolation { frequency: f64, nyquist: f64 },

    #[error("non-finite sample at channel {channel}, index {index}")]
    NonFinite { channel: usize, index: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MemdError {
    fn from(err: std::io::Error) -> Self {
        MemdError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MemdError>;
