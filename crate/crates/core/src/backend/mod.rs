//! Promptable segmentation backends.
//!
//! All model inference sits behind [`Backend`]. Two implementations ship
//! with the crate: [`SyntheticBackend`], an exact analytic oracle over
//! rectangle scenes, and [`ProcessBackend`], which speaks the JSON-lines
//! protocol in [`protocol`] to a child process.

mod process;
pub mod protocol;
mod synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::RleMask;

pub use process::{ProcessBackend, BACKEND_CMD_ENV};
pub use synthetic::{
    frame_ref, parse_frame_ref, Rect, SceneObject, SyntheticBackend, SyntheticScene,
};

/// Pixel coordinate `(x, y)`; serialized as a two-element array.
pub type Point = (u32, u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionKind {
    Image,
    Video,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendSession {
    pub session_id: String,
    pub kind: SessionKind,
    pub frame_count: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptObject {
    pub object_id: u32,
    pub init_mask: RleMask,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskResult {
    pub object_id: u32,
    pub frame_offset: i32,
    pub mask: RleMask,
    #[serde(default = "default_score")]
    pub score: f64,
}

fn default_score() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> i32 {
        match self {
            Direction::Forward => 1,
            Direction::Backward => -1,
        }
    }
}

/// Errors a backend can report. Each variant has a stable wire code.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("session not found: {0}")]
    SessionNotFound(String),
    #[error("duplicate object id {0}")]
    DuplicateObjectId(u32),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("point ({0}, {1}) out of bounds")]
    PointOutOfBounds(u32, u32),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("{code}: {message}")]
    Other { code: String, message: String },
}

impl BackendError {
    pub fn code(&self) -> &str {
        match self {
            BackendError::Unavailable(_) => "backend_unavailable",
            BackendError::SessionNotFound(_) => "session_not_found",
            BackendError::DuplicateObjectId(_) => "duplicate_object_id",
            BackendError::ShapeMismatch(_) => "shape_mismatch",
            BackendError::PointOutOfBounds(..) => "point_out_of_bounds",
            BackendError::BadRequest(_) => "bad_request",
            BackendError::Protocol(_) => "protocol_error",
            BackendError::Other { code, .. } => code,
        }
    }

    /// Human-readable detail carried in the wire `message` field.
    pub fn message(&self) -> String {
        match self {
            BackendError::Unavailable(m)
            | BackendError::SessionNotFound(m)
            | BackendError::ShapeMismatch(m)
            | BackendError::BadRequest(m)
            | BackendError::Protocol(m) => m.clone(),
            BackendError::DuplicateObjectId(id) => id.to_string(),
            BackendError::PointOutOfBounds(x, y) => format!("{x},{y}"),
            BackendError::Other { message, .. } => message.clone(),
        }
    }

    /// Inverse of `(code(), message())`. Unknown codes or unparsable
    /// details become [`BackendError::Other`].
    pub fn from_wire(code: &str, message: &str) -> Self {
        let m = message.to_string();
        let parsed = match code {
            "backend_unavailable" => Some(BackendError::Unavailable(m.clone())),
            "session_not_found" => Some(BackendError::SessionNotFound(m.clone())),
            "shape_mismatch" => Some(BackendError::ShapeMismatch(m.clone())),
            "bad_request" => Some(BackendError::BadRequest(m.clone())),
            "protocol_error" => Some(BackendError::Protocol(m.clone())),
            "duplicate_object_id" => message.parse().ok().map(BackendError::DuplicateObjectId),
            "point_out_of_bounds" => message.split_once(',').and_then(|(x, y)| {
                Some(BackendError::PointOutOfBounds(
                    x.parse().ok()?,
                    y.parse().ok()?,
                ))
            }),
            _ => None,
        };
        parsed.unwrap_or(BackendError::Other {
            code: code.to_string(),
            message: m,
        })
    }
}

/// A promptable image/video segmentation model.
///
/// Video sessions hold an ordered frame list. Objects are prompted with
/// masks on one frame (`frame_index` into the session's list) and
/// [`Backend::propagate`] tracks them along the list; result offsets are
/// relative to the prompt frame in session order.
pub trait Backend {
    fn open_video(&mut self, frames: &[String]) -> Result<BackendSession, BackendError>;

    fn add_objects(
        &mut self,
        session_id: &str,
        frame_index: u32,
        objects: &[PromptObject],
    ) -> Result<(), BackendError>;

    fn propagate(
        &mut self,
        session_id: &str,
        direction: Direction,
        horizon: u32,
    ) -> Result<Vec<MaskResult>, BackendError>;

    fn segment_points(
        &mut self,
        image: &str,
        points: &[Point],
        refine_iters: u32,
    ) -> Result<MaskResult, BackendError>;

    fn auto_masks(&mut self, image: &str) -> Result<Vec<MaskResult>, BackendError>;

    fn close_session(&mut self, session_id: &str) -> Result<(), BackendError>;
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn open_video(&mut self, frames: &[String]) -> Result<BackendSession, BackendError> {
        (**self).open_video(frames)
    }

    fn add_objects(
        &mut self,
        session_id: &str,
        frame_index: u32,
        objects: &[PromptObject],
    ) -> Result<(), BackendError> {
        (**self).add_objects(session_id, frame_index, objects)
    }

    fn propagate(
        &mut self,
        session_id: &str,
        direction: Direction,
        horizon: u32,
    ) -> Result<Vec<MaskResult>, BackendError> {
        (**self).propagate(session_id, direction, horizon)
    }

    fn segment_points(
        &mut self,
        image: &str,
        points: &[Point],
        refine_iters: u32,
    ) -> Result<MaskResult, BackendError> {
        (**self).segment_points(image, points, refine_iters)
    }

    fn auto_masks(&mut self, image: &str) -> Result<Vec<MaskResult>, BackendError> {
        (**self).auto_masks(image)
    }

    fn close_session(&mut self, session_id: &str) -> Result<(), BackendError> {
        (**self).close_session(session_id)
    }
}
