use thiserror::Error;

/// Errors raised by estimators, tests and the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient data: need at least {required} observations, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("degenerate variable {index}: variance estimate {value} is not positive")]
    DegenerateVariable { index: usize, value: f64 },

    /// The classical statistic does not exist for this shape of data.
    #[error("{test} is not defined: {reason}; use one of {alternatives} instead")]
    NotDefined { test: &'static str, reason: String, alternatives: &'static str },

    /// A studentizing variance for the entry (i, j) is zero in both samples.
    #[error("degenerate pair ({i}, {j}): variance estimate {value} is not positive")]
    DegeneratePair { i: usize, j: usize, value: f64 },

    #[error("singular matrix: {0}")]
    Singular(String),

    /// A variance or scale estimate needed for standardization is not positive.
    #[error("calibration failure in {what}: estimate {value} is not positive")]
    Calibration { what: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear program infeasible: {0}")]
    Infeasible(String),

    #[error("enumeration refused: n = {n} exceeds the oracle cap {cap}")]
    OracleCap { n: usize, cap: usize },

    #[error("unsupported dimension p = {p}: {reason}")]
    UnsupportedDimension { p: usize, reason: &'static str },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("harness failure: {0}")]
    Harness(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn require_n(actual: usize, required: usize) -> Result<()> {
    if actual < required {
        Err(Error::InsufficientData { required, actual })
    } else {
        Ok(())
    }
}
