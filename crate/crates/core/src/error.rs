use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular linear system in {0}; use a ridge coefficient lambda > 0")]
    Singular(&'static str),

    #[error("filtration is not monotone: {0}")]
    NonMonotone(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("[{module}] {source}")]
    Module {
        module: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Tag an error with the module that produced it.
    pub fn in_module(self, module: &'static str) -> Self {
        match self {
            Error::Module { .. } => self,
            other => Error::Module {
                module,
                source: Box::new(other),
            },
        }
    }

    /// True for errors caused by bad configuration rather than runtime failure.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) => true,
            Error::Module { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
