use haas_core::HaasError;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] HaasError),

    #[error("run {label} failed: {source}")]
    Run {
        label: String,
        #[source]
        source: HaasError,
    },

    #[error("invalid battery field `{field}`: {reason}")]
    Spec { field: String, reason: String },

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error at {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("json error at {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("unknown battery `{0}`")]
    UnknownBattery(String),
}

impl BenchError {
    pub fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        BenchError::Spec {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            BenchError::Core(e) | BenchError::Run { source: e, .. } => e.field(),
            BenchError::Spec { field, .. } => Some(field),
            _ => None,
        }
    }
}
