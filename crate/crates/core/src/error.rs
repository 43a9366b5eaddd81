use std::path::PathBuf;

use crate::backend::BridgeError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input data violates a precondition (bad file, bad shape, bad values).
    #[error("data error: {0}")]
    Data(String),

    /// A parameter or configuration value is out of its valid range.
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("backend error: {0}")]
    Backend(#[from] BridgeError),

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Param(msg.into())
    }
}
