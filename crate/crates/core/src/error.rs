use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::backend::BackendError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: u32, height: u32 },

    #[error("pixel ({x}, {y}) has value {value}, which is neither a known class nor ignore")]
    ValueOutOfRange { value: u8, x: u32, y: u32 },

    #[error("unknown class id {0}")]
    UnknownClass(u8),

    #[error("unknown class name {0:?}")]
    UnknownClassName(String),

    #[error("invalid class table: {0}")]
    InvalidClassTable(String),

    #[error("invalid run-length encoding: {0}")]
    InvalidRle(String),

    #[error("{path}: unsupported raster ({reason})")]
    UnsupportedRaster { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("confusion matrix is empty")]
    EmptyMatrix,

    #[error("mask is empty")]
    EmptyMask,

    #[error("clip {0:?} has no fine annotation at its anchor frame")]
    MissingAnchorAnnotation(String),

    #[error("clip {clip_id:?} has no frame at offset {offset}")]
    MissingFrame { clip_id: String, offset: i32 },

    #[error("clip list is empty")]
    EmptyClipList,

    #[error("pool too small: need {needed} {kind} samples, have {available}")]
    PoolTooSmall {
        kind: &'static str,
        needed: usize,
        available: usize,
    },

    #[error("no motion score for clip {0:?}")]
    MissingScore(String),

    #[error("unknown mixing scheme {0:?}")]
    UnknownScheme(String),

    #[error(transparent)]
    Backend(#[from] BackendError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Image { .. })
    }
}
