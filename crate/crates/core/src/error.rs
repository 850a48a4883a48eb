use thiserror::Error;

/// Errors raised by field construction, the cell solver and the SDE simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mesh period {mesh} does not match field period {field}")]
    PeriodMismatch { mesh: f64, field: f64 },

    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("trajectory left the finite range at step {step}")]
    NonFiniteState { step: u64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed record at line {line}: {reason}")]
    Format { line: u64, reason: String },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
