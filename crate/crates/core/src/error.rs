use std::path::PathBuf;

use thiserror::Error;

use crate::config::Violation;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration ({} violation(s)): {}", .0.len(), join(.0))]
    InvalidConfig(Vec<Violation>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: malformed artifact: {message}")]
    Artifact { path: PathBuf, message: String },

    #[error("missing artifact: {0}")]
    MissingArtifact(PathBuf),

    #[error("topology: {0}")]
    Topology(String),

    #[error("scheduler: {0}")]
    Scheduler(String),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}
