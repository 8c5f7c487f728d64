//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on operation inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Vector/matrix/raster dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// Operation called on an object that is not in a usable state.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A data file could not be parsed.
    #[error("parse error in {path}: {reason}")]
    Parse { path: String, reason: String },

    /// Model archive declares a version this build does not read.
    #[error("unsupported model archive version {found} (this build reads version {supported})")]
    UnsupportedVersion { found: u16, supported: u16 },

    /// Model archive failed structural or checksum validation.
    #[error("corrupt model archive: {0}")]
    CorruptArchive(String),

    /// An attribute name was not found in the loaded attribute table.
    #[error("unknown attribute '{name}'; available: {available}")]
    UnknownAttribute { name: String, available: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimMismatch(msg.into())
    }
}
