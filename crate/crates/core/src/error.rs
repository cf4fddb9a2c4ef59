use thiserror::Error;

/// Errors raised by the model, the harness and the I/O layer.
#[derive(Debug, Error)]
pub enum ChaiError {
    /// An argument outside the operation's domain (unknown id, empty context, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An enumeration would exceed the configured cap.
    #[error(
        "lexicon space has {size} elements, above the cap of {cap}; use the sampling path instead"
    )]
    SpaceTooLarge { size: usize, cap: usize },

    /// Invalid configuration; `field` names the offending key.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ChaiError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        ChaiError::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        ChaiError::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ChaiError>;
