use thiserror::Error;

/// Crate-wide error type.
///
/// The variants map onto the process exit codes used by the CLI: `Config`
/// is a usage problem, `Ingestion`/`Data`/`Format` are data problems, and
/// `Numeric` signals a numerical failure (divergence, non-finite values).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration value or unusable parameter combination.
    #[error("config error: {0}")]
    Config(String),

    /// Raw input could not be ingested (encoding, alignment, missing data).
    #[error("ingestion error at byte offset {offset}: {message}")]
    Ingestion { offset: usize, message: String },

    /// Well-formed input that violates a precondition of an operation.
    #[error("data error: {0}")]
    Data(String),

    /// Tensor/parameter shape mismatch.
    #[error("shape error: {0}")]
    Shape(String),

    /// Numerical failure during training or evaluation.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed artifact file (checkpoint, TSV, JSON).
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
