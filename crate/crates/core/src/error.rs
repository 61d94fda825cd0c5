use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("example `{id}`: {message}")]
    InvalidExample { id: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in row {row}")]
    NonFinite { row: usize },

    #[error("training diverged at step {step} (step size {step_size:e})")]
    Divergence { step: usize, step_size: f64 },

    #[error("unsupported design: {0}")]
    UnsupportedDesign(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("pool exhausted at iteration {iteration}: need {needed}, have {available}")]
    PoolExhausted {
        iteration: usize,
        needed: usize,
        available: usize,
    },
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
