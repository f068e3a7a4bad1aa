use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("invalid degree: {0}")]
    InvalidDegree(String),

    #[error("Luxemburg integral is not finite at lambda = {lambda}")]
    DivergedIntegral { lambda: f64 },

    #[error("Luxemburg bisection found no admissible lambda up to {limit}")]
    NoConvergence { limit: f64 },

    #[error("Luxemburg integral is not monotone in lambda (I({lo}) < I({hi}))")]
    NonMonotone { lo: f64, hi: f64 },

    #[error("no admissible ball: {0}")]
    EmptyFamily(String),

    #[error("expression error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("rejected conjugate pair: {0}")]
    RejectedPair(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
