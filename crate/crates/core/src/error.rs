use thiserror::Error;

/// Rejected configuration. Every variant names the offending field.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("topology: {0}")]
    Topology(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }

    /// Name of the configuration field at fault, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { field, .. } => Some(field),
            ConfigError::UnknownKey(key) => Some(key),
            ConfigError::Topology(_) => Some("topology"),
            ConfigError::Syntax { .. } => None,
        }
    }
}
