use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}: edge list contains no edges")]
    EmptyGraph(PathBuf),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("registry record {index}: {message}")]
    CorruptRecord { index: usize, message: String },

    #[error("signature from `{party}` failed verification")]
    SignatureRejected { party: String },

    #[error("invalid timestamp `{0}`: expected ISO-8601 / RFC 3339")]
    Timestamp(String),

    #[error("invalid key material: {0}")]
    Key(String),

    #[error("not enough eligible nodes: need {required}, have {available}")]
    NodeExhaustion { required: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
