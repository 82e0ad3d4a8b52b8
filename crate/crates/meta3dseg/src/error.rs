//! Crate-wide error type and exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or network shapes do not agree.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Bad user-supplied argument (category name, parameter range, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A run configuration failed schema validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A binary file is malformed (bad magic, version, checksum, layout).
    #[error("format error: {0}")]
    Format(String),

    /// Training loss blew up or went non-finite.
    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 validation, 3 divergence, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Diverged(_) => 3,
            Error::Io(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
