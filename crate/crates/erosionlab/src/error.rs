use std::path::PathBuf;

/// Crate-wide error type. Variants map onto the CLI exit codes:
/// config errors exit 2, precondition errors exit 3, I/O errors exit 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("serialization error: {0}")]
    Serialize(String),
}

/// Checkpoint load failures, kept distinct so callers can tell a garbage
/// file from a stale format from a table that belongs to another world.
#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("bad magic bytes (expected \"ERLB\")")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// CLI exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Serialize(_) => 2,
            Error::Precondition(_) => 3,
            Error::Io { .. } | Error::Checkpoint(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
