use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A mathematical precondition was violated (rank out of range, empty split, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data failed validation (shape mismatch, non-finite entries, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// An operation was called in the wrong order (e.g. backward before forward).
    #[error("state error: {0}")]
    State(String),

    /// The optimizer encountered a non-finite quantity.
    #[error("optimization error on `{tensor}`: {message}")]
    Optimization { tensor: String, message: String },

    /// A time integrator blew up.
    #[error("simulation error at step {step}: {message}")]
    Simulation { step: usize, message: String },

    /// Bad model/experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A serialized container could not be parsed.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn state(msg: impl Into<String>) -> Self {
        Error::State(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
