//! Label rasters, binary masks and their codecs, instance extraction and
//! dataset manifests.

mod class_table;
mod components;
mod io;
mod label_map;
mod manifest;
mod mask;

pub use class_table::{ClassEntry, ClassTable, CITYSCAPES_TABLE_NAME, DEFAULT_IGNORE_ID};
pub use components::{
    connected_components, extract_instances, Component, InstanceRaster, InstanceRecord,
};
pub use io::{load_labelmap, save_labelmap};
pub use label_map::{compose_labelmap, LabelMap};
pub use manifest::{resolve_path, Annotation, AnnotationKind, Clip, DatasetManifest, FrameEntry};
pub use mask::{rle_decode, rle_encode, BinaryMask, RleMask};
