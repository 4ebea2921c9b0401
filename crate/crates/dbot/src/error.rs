use std::path::PathBuf;

use dbot_core::CoreError;

use crate::gateway::GatewayError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("duplicate tool api `{0}`")]
    DuplicateApi(String),
    #[error("malformed tool manifest: {0}")]
    MalformedManifest(String),
    #[error("unknown tool api `{0}`")]
    UnknownApi(String),
    #[error("empty tool registry")]
    EmptyRegistry,
    #[error("could not parse model response: {0}")]
    ParseFailure(String),
    #[error("duplicate knowledge chunk `{0}`")]
    DuplicateChunk(String),
    #[error("unknown knowledge chunk `{0}`")]
    UnknownChunk(String),
    #[error("benchmark case `{case_id}`: {message}")]
    SchemaViolation { case_id: String, message: String },
    #[error("publish after the bus was closed")]
    PublishAfterClose,
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
