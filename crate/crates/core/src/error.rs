use thiserror::Error;

/// Errors produced by the kfdr library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target {target} outside attainable range [{lo}, {hi}]")]
    OutOfRange { target: f64, lo: f64, hi: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("schedule direction is {found}, operation requires {expected}")]
    DirectionMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("binomial coefficient C({n}, {k}) overflows 128-bit integers")]
    Overflow { n: usize, k: usize },

    #[error("degenerate sampler: {0}")]
    DegenerateSampler(String),

    #[error("distribution is not exchangeable: {0}")]
    NotExchangeable(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad inputs rather than numerical or I/O failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::LengthMismatch { .. }
                | Error::DirectionMismatch { .. }
                | Error::Parse { .. }
                | Error::NotExchangeable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
