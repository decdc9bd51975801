use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite {what}: {value:?}")]
    NonFinite { what: &'static str, value: Vec<f64> },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("zero polynomial has no well-defined roots")]
    ZeroPolynomial,

    #[error("operation requires degree {expected}, got {actual}")]
    DegreeMismatch { expected: usize, actual: usize },

    #[error("no sign change of {indicator} in [{lo}, {hi}]")]
    NoSignChange {
        indicator: String,
        lo: f64,
        hi: f64,
        trace: Vec<(f64, f64)>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("maximum number of steps ({0}) exceeded")]
    TooManySteps(usize),

    #[error("orbit left the invariant domain at t = {t}")]
    EscapedDomain { t: f64 },

    #[error("no recurrence detected: {0}")]
    NoRecurrence(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("singular linear system in {0}")]
    Singular(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
