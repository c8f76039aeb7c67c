use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: expected {expected}, found {found}")]
    Shape {
        what: String,
        expected: String,
        found: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid range for variable {var}: lo={lo}, hi={hi} (need lo < hi)")]
    InvalidRange { var: usize, lo: f64, hi: f64 },

    #[error("bit {index} has value {value}; bits must be 0 or 1")]
    NotABit { index: usize, value: u8 },

    #[error(
        "term of size {size} exceeds 4; another quadratization level is required and is not implemented"
    )]
    TermTooLarge { size: usize },

    #[error(
        "{bits} bits exceeds the brute-force limit of {limit} ({bits} bits = {states} states)"
    )]
    TooManyBits {
        bits: usize,
        limit: usize,
        states: f64,
    },

    #[error("system has degree {0}; a linear (degree 1) system is required")]
    NotLinear(usize),

    #[error("covariance matrix is not positive definite ({0})")]
    SingularCovariance(String),

    #[error("right-hand side P0 is zero; relative residual is undefined")]
    ZeroRhs,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(
        what: impl Into<String>,
        expected: impl ToString,
        found: impl ToString,
    ) -> Self {
        Error::Shape {
            what: what.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {}, column {}: {}", e.line(), e.column(), e))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
