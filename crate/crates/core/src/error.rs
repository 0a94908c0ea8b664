use thiserror::Error;

use crate::modes::CollaborationMode;

#[derive(Debug, Error)]
pub enum HaasError {
    #[error("invalid affinity weights: {0}")]
    InvalidWeights(String),

    #[error("catalogue row {row} ({id}): {reason}")]
    InvalidSubtask { row: usize, id: String, reason: String },

    #[error("invalid scenario `{name}`: {reason}")]
    InvalidScenario { name: String, reason: String },

    #[error("invalid policy rule `{id}`: {reason}")]
    InvalidRule { id: String, reason: String },

    #[error("invalid configuration field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("mode {mode} conflicts with subtask `{subtask}` constraint {constraint}")]
    ConstraintConflict {
        mode: CollaborationMode,
        subtask: String,
        constraint: String,
    },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("unknown subtask `{0}`")]
    UnknownSubtask(String),

    #[error("no subtasks available for domain {0}")]
    EmptyCatalog(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl HaasError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        HaasError::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Field name for structured validation errors, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            HaasError::InvalidConfig { field, .. } => Some(field),
            HaasError::UnknownScenario(_) => Some("scenario"),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, HaasError>;
