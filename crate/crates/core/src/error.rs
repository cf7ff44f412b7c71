use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: missing required column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },

    #[error("{}:{line}: malformed row: {reason}", path.display())]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{}:{line}: {message}", path.display())]
    FrequencyTable {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{origin}:{line}: {message}")]
    Mapping {
        origin: String,
        line: u64,
        message: String,
    },

    #[error("{}: {message}", path.display())]
    Report { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("temporary storage in {}: {message}", dir.display())]
    Spill { dir: PathBuf, message: String },

    #[error("edge id `{0}` has more than 9999 colliding edges")]
    IdSpaceExhausted(String),
}

impl Error {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        Error::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Errors caused by how the tool was invoked rather than by the data.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::MissingColumn { .. } | Error::Mapping { .. }
        )
    }
}
