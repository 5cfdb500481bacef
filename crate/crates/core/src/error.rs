use thiserror::Error;

/// Errors raised across the lab. The CLI maps `Config` and `Capability`
/// to exit code 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("configuration error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("capability error: {0}")]
    Capability(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("statistics error: {0}")]
    Stats(String),
}

impl LabError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        LabError::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn capability(msg: impl Into<String>) -> Self {
        LabError::Capability(msg.into())
    }

    pub fn structural(msg: impl Into<String>) -> Self {
        LabError::Structural(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        LabError::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
