use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("size out of range: {0}")]
    Size(String),

    #[error("arity mismatch: expected {expected} settings, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("correlation provider failed: {0}")]
    Provider(String),

    #[error("division by zero: {0}")]
    Division(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// Stable machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Size(_) => "size",
            Error::Arity { .. } => "arity",
            Error::Argument(_) => "argument",
            Error::Provider(_) => "provider",
            Error::Division(_) => "division",
            Error::InsufficientData(_) => "insufficient_data",
        }
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
