use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("failed to decode image {path}: {source}")]
    Decode {
        path: PathBuf,
        source: image::ImageError,
    },

    #[error("image has zero area")]
    EmptyImage,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mask dimensions {0}x{1} do not match {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),

    #[error("shape spec line {line}: {msg}")]
    SpecParse { line: usize, msg: String },

    #[error("empty mask")]
    EmptyMask,

    #[error("malformed cost volume dump: {0}")]
    VolumeFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
