use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] beltrami_core::Error),
    #[error("json encoding failed: {0}")]
    Json(#[from] serde_json::Error),
}
