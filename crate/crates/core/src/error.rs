use thiserror::Error;

/// Errors raised by the estimation and planning routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A precondition on a combination of arguments does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("batch is empty")]
    EmptyBatch,

    #[error("batches have different sizes ({0} vs {1})")]
    BatchSizeMismatch(usize, usize),

    #[error("batch power {actual} does not match the signal plan power {expected}")]
    PowerMismatch { expected: f64, actual: f64 },

    /// The noise-power estimate is not positive, so the SNR ratio is undefined.
    #[error("noise-power estimate is not positive (denominator {0}); SNR is undefined")]
    NonPositiveNoiseEstimate(f64),

    /// One of the two denominators of the general SNR interval is not positive.
    #[error("SNR interval denominator is not positive ({0})")]
    NonPositiveDenominator(f64),

    #[error("iteration did not converge: {0}")]
    NoConvergence(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
