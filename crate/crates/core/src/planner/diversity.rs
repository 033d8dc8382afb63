use std::collections::BTreeMap;
use std::path::Path;

use image::{GrayImage, ImageReader};

use crate::backend::{parse_frame_ref, SyntheticScene};
use crate::error::{Error, Result};
use crate::raster::{resolve_path, DatasetManifest};

/// Orders clips by descending motion score, ties by clip id.
pub fn diversity_rank(clip_ids: &[String], scores: &BTreeMap<String, f64>) -> Result<Vec<String>> {
    let mut scored = Vec::with_capacity(clip_ids.len());
    for id in clip_ids {
        let s = *scores
            .get(id)
            .ok_or_else(|| Error::MissingScore(id.clone()))?;
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "motion score {s} for clip {id:?}"
            )));
        }
        scored.push((id.clone(), s));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(scored.into_iter().map(|(id, _)| id).collect())
}

/// Mean absolute per-pixel difference of two equally sized grey images.
pub fn mean_abs_difference(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            a.dimensions(),
            b.dimensions()
        )));
    }
    if a.as_raw().is_empty() {
        return Err(Error::InvalidDimensions {
            width: a.width(),
            height: a.height(),
        });
    }
    let sum: u64 = a
        .as_raw()
        .iter()
        .zip(b.as_raw())
        .map(|(x, y)| x.abs_diff(*y) as u64)
        .sum();
    Ok(sum as f64 / a.as_raw().len() as f64)
}

/// Loads any supported image as 8-bit luminance.
pub fn load_gray(path: &Path) -> Result<GrayImage> {
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|source| Error::Image {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.into_luma8())
}

/// Loads a frame as grey levels. Synthetic frame references render the
/// scene's label map; anything else is read from disk.
pub fn load_frame(path: &Path, scenes: &BTreeMap<String, SyntheticScene>) -> Result<GrayImage> {
    let Some((scene_id, offset)) = path.to_str().and_then(parse_frame_ref) else {
        return load_gray(path);
    };
    let scene = scenes
        .get(scene_id)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown synthetic scene {scene_id:?}")))?;
    let labels = scene.label_map(offset);
    Ok(
        GrayImage::from_raw(labels.width(), labels.height(), labels.into_data())
            .expect("buffer matches shape"),
    )
}

/// Motion proxy for every clip: mean absolute difference between the anchor
/// frame and the frame `step` later. `load` receives resolved frame paths.
pub fn clip_motion_scores(
    manifest: &DatasetManifest,
    base_dir: &Path,
    step: i32,
    load: impl Fn(&Path) -> Result<GrayImage>,
) -> Result<BTreeMap<String, f64>> {
    let mut scores = BTreeMap::new();
    for clip in &manifest.clips {
        let frame = |rel: i32| {
            let offset = clip.absolute(rel);
            clip.frame_at(offset)
                .map(|f| resolve_path(base_dir, &f.image_path))
                .ok_or_else(|| Error::MissingFrame {
                    clip_id: clip.clip_id.clone(),
                    offset,
                })
        };
        let a = load(&frame(0)?)?;
        let b = load(&frame(step)?)?;
        scores.insert(clip.clip_id.clone(), mean_abs_difference(&a, &b)?);
    }
    Ok(scores)
}
