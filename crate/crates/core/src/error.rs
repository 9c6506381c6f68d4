use thiserror::Error;

/// Errors raised by the optimization framework.
///
/// `Usage` covers bad arguments to an operation (empty population, eps <= 0,
/// unknown benchmark). `Config` covers structurally inconsistent setups
/// (arity mismatches, invalid algorithm parameters, state caps).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SgoalError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl SgoalError {
    pub fn usage(msg: impl Into<String>) -> Self {
        SgoalError::Usage(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        SgoalError::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, SgoalError>;
