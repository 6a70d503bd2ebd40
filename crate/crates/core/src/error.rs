use thiserror::Error;

/// Errors raised by the update rules, the benchmark harness and the trainer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {field} {message}")]
    Config {
        field: &'static str,
        message: String,
    },

    #[error("non-finite value in {0}")]
    Numeric(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("missing parameter subset `{0}`")]
    MissingSubset(String),

    #[error("divergence at step {step}: |parameter| exceeded {limit}")]
    Divergence { step: u64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config_err(field: &'static str, message: impl Into<String>) -> Error {
    Error::Config {
        field,
        message: message.into(),
    }
}

pub(crate) fn ensure_finite(what: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(what.to_string()))
    }
}
