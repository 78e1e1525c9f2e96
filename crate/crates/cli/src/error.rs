use std::path::PathBuf;

use muskia::format::LoadError;
use muskia::raster::RasterError;
use muskia::BalanceError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source} ({class})", class = source.class())]
    Load {
        path: PathBuf,
        #[source]
        source: LoadError,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: RasterError,
    },
    #[error(transparent)]
    Unbalanced(#[from] BalanceError),
    #[error(transparent)]
    Raster(RasterError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for anything wrong with the input, 3 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Write { .. } => 3,
            CliError::Image {
                source: RasterError::Io { .. },
                ..
            } => 3,
            CliError::Raster(RasterError::Io { .. }) => 3,
            _ => 2,
        }
    }
}

impl From<RasterError> for CliError {
    fn from(e: RasterError) -> Self {
        match e {
            RasterError::Unbalanced(b) => CliError::Unbalanced(b),
            other => CliError::Raster(other),
        }
    }
}
