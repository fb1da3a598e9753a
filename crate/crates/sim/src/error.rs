use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] afdm_iqi::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config serialisation error: {0}")]
    TomlSer(#[from] toml::ser::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl SimError {
    /// Short machine-readable category used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::Config(_) => "config",
            SimError::Model(_) => "model",
            SimError::Io { .. } => "io",
            SimError::Toml(_) | SimError::TomlSer(_) => "config_parse",
            SimError::Json(_) => "json",
            SimError::Csv(_) => "csv",
            SimError::Pool(_) => "pool",
        }
    }
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn config_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(SimError::Config(msg.into()))
}
