//! Annotation-cost reduction toolkit for video semantic segmentation.
//!
//! The crate is organised around a small raster data model ([`raster`]), an
//! evaluation module ([`metrics`]), a promptable-segmentation backend
//! abstraction with a wire protocol and an exact synthetic implementation
//! ([`backend`]), and the three pipelines built on top of them:
//! pseudo-label propagation ([`propagation`]), coarse annotation refinement
//! ([`refine`]) and dataset mix planning ([`planner`]).

pub mod backend;
pub mod batch;
pub mod error;
pub mod metrics;
pub mod planner;
pub mod propagation;
pub mod raster;
pub mod refine;
pub mod seed;

pub use backend::{
    Backend, BackendError, BackendSession, Direction, MaskResult, Point, PromptObject, SessionKind,
};
pub use error::{Error, Result};
pub use metrics::ConfusionMatrix;
pub use raster::{
    compose_labelmap, extract_instances, load_labelmap, rle_decode, rle_encode, save_labelmap,
    Annotation, AnnotationKind, BinaryMask, ClassEntry, ClassTable, Clip, DatasetManifest,
    FrameEntry, InstanceRaster, InstanceRecord, LabelMap, RleMask,
};
