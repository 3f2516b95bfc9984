use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("run aborted at t = {time}: {reason}")]
    Aborted { time: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
