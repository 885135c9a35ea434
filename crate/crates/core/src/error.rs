use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the engine. Each variant maps to a stable `E_*` code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation failed: {invariant} ({object})")]
    Validate { invariant: String, object: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("geometry error: {0}")]
    Geom(String),

    #[error("layer stack error: {0}")]
    Stack(String),

    #[error("rules error: {0}")]
    Rules(String),

    #[error("unknown or reference net: {0}")]
    NoNet(String),

    #[error("no reference shape available: {0}")]
    NoRef(String),

    #[error("invalid benchmark parameters: {0}")]
    Params(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "E_PARSE",
            Error::Validate { .. } => "E_VALIDATE",
            Error::Io { .. } => "E_IO",
            Error::Geom(_) => "E_GEOM",
            Error::Stack(_) => "E_STACK",
            Error::Rules(_) => "E_RULES",
            Error::NoNet(_) => "E_NONET",
            Error::NoRef(_) => "E_NOREF",
            Error::Params(_) => "E_PARAMS",
        }
    }

    pub(crate) fn validate(invariant: impl Into<String>, object: impl Into<String>) -> Self {
        Error::Validate {
            invariant: invariant.into(),
            object: object.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
