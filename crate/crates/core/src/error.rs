use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range (basis has {len} elements)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid weight spec: {0}")]
    InvalidSpec(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("schedule level count overflows a 64-bit integer at level {level}")]
    ScheduleOverflow { level: usize },

    #[error("{0} is not a power of two")]
    NotPowerOfTwo(u64),

    #[error("functions live on different bases")]
    BasisMismatch,

    #[error("no integral known for basis function {0}")]
    MissingIntegral(usize),

    #[error("operation requires a Fourier basis")]
    NotFourier,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}
