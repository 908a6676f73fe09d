use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed manifest: {0}")]
    Manifest(String),
    #[error("unsupported image format: {0}")]
    Format(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("layer geometry leaves no valid ray in range")]
    EmptyMask,
    #[error("enumeration too large: {0} units (limit {1})")]
    EnumerationTooLarge(usize, usize),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    Version(u16),
    #[error("stream truncated{}", match .last_complete_level {
        Some(l) => format!(" (last complete level {l})"),
        None => String::new(),
    })]
    Truncated { last_complete_level: Option<usize> },
    #[error("corrupt stream: {0}")]
    Corrupt(String),
    #[error("rate-distortion curve: {0}")]
    Curve(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
