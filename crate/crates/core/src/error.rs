use thiserror::Error;

/// Errors raised by the GST-TCM library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("linearly dependent generator rows in binary code")]
    DependentRows,

    #[error("ill-conditioned basis (diagonal ratio {ratio:.3e} exceeds ceiling {ceiling:.3e})")]
    IllConditioned { ratio: f64, ceiling: f64 },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("case unrealizable: no alignment of a length-{len} event spans {blocks} blocks of length {block_len}")]
    Unrealizable { len: usize, blocks: usize, block_len: usize },

    #[error("config error at {file}:{line}: {field}: {message}")]
    Config {
        file: String,
        line: usize,
        field: String,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(
        file: impl Into<String>,
        line: usize,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Config {
            file: file.into(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
