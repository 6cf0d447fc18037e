use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The caller handed in something that violates an operation's precondition.
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// A scalar function evaluated on a spectrum left the range of finite doubles.
    #[error("numerical overflow: {0}")]
    Overflow(String),

    /// A dense decomposition did not converge.
    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("invalid spec string: {0}")]
    Spec(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn rejected(msg: impl Into<String>) -> Self {
        Error::RejectedInput(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
