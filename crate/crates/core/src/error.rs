use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("prefix state mismatch: operation requires has_cpp = {expected}")]
    PrefixState { expected: bool },

    #[error("path delay {delay} exceeds prefix length {cpp_len}")]
    DelayExceedsPrefix { delay: usize, cpp_len: usize },

    #[error("IQ imbalance is not invertible: |mu|^2 - |upsilon|^2 = {0:e}")]
    NonInvertibleImbalance(f64),

    #[error("singular system in {0}")]
    SingularSystem(&'static str),

    #[error("ML search space of {bits} bits exceeds the limit of {limit}")]
    SearchSpaceTooLarge { bits: usize, limit: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
