use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SleError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid state: {0}")]
    State(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("resource budget exceeded: {0}")]
    Resource(String),
    #[error("insufficient data: {0}")]
    Data(String),
    #[error("insufficient trace resolution: {0}")]
    Resolution(String),
}

pub type Result<T> = std::result::Result<T, SleError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(SleError::Parameter(msg.into()))
}
