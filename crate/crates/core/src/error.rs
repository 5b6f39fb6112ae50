use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("factorization failed at pivot {pivot}")]
    Factorization { pivot: usize },
    #[error("numerical failure: {message} (achieved tolerance {achieved:e})")]
    Numerical { message: String, achieved: f64 },
    #[error("unsupported family: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("diverged at iteration {iteration}: {message}")]
    Diverged {
        iteration: usize,
        message: String,
        /// Natural-scale parameter history up to the failure.
        trace: Vec<Vec<f64>>,
    },
    #[error("{context}: {message}")]
    Input { context: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn numerical(message: impl Into<String>) -> Self {
        Error::Numerical {
            message: message.into(),
            achieved: f64::NAN,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
