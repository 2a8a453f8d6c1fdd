//! File formats, the command line, and the teleoperation service around
//! [`trackbc_core`].

pub mod checkpoint;
pub mod cli;
pub mod demo_file;
pub mod fsio;
pub mod results;
pub mod scenario;
pub mod teleop;

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// Malformed input text, with a 1-based line number where one applies.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: unsupported checkpoint version {version}")]
    Version { path: PathBuf, version: u32 },

    #[error(transparent)]
    Core(#[from] trackbc_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
