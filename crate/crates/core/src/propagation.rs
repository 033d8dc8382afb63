//! Pseudo-label propagation from one annotated anchor frame.
//!
//! The anchor label map is cut into 4-connected single-class regions, each
//! region is handed to the backend as a mask prompt, and the backend tracks
//! the prompts forward through the clip and, in a second session over the
//! reversed frame order, backward. Tracked masks are fused back into label
//! maps; pixels claimed by no track become ignore.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, Direction, MaskResult, PromptObject};
use crate::batch::{run_parallel, BatchRun, ClipFailure};
use crate::error::{Error, Result};
use crate::raster::{
    compose_labelmap, connected_components, load_labelmap, resolve_path, save_labelmap, Annotation,
    AnnotationKind, BinaryMask, ClassTable, Clip, DatasetManifest, LabelMap,
};

/// Reference frame area for `min_prompt_area` (1920x1080).
const REFERENCE_AREA: u64 = 1920 * 1080;

/// How overlapping tracked masks are resolved when fusing a frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapRule {
    /// Highest score wins; ties go to the larger mask, then the lower
    /// object id.
    #[default]
    Score,
    /// Masks are painted largest first, so the smallest mask wins.
    AreaDesc,
    /// Masks are painted smallest first, so the largest mask wins.
    AreaAsc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub horizon: u32,
    /// Minimum component area in pixels at 1920x1080; scaled down
    /// proportionally for smaller frames.
    pub min_prompt_area: u32,
    pub overlap_rule: OverlapRule,
    /// Anchor-relative offsets to materialize.
    pub selected_offsets: Vec<i32>,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            horizon: 10,
            min_prompt_area: 100,
            overlap_rule: OverlapRule::Score,
            selected_offsets: vec![-10, 10],
        }
    }
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        for &o in &self.selected_offsets {
            if o == 0 || o.unsigned_abs() > self.horizon {
                return Err(Error::InvalidConfig(format!(
                    "selected offset {o} outside [-{h}, +{h}] \\ {{0}}",
                    h = self.horizon
                )));
            }
        }
        Ok(())
    }

    /// `min_prompt_area` scaled to a `width` x `height` frame, at least 1.
    pub fn effective_min_area(&self, width: u32, height: u32) -> u32 {
        let area = u64::from(width) * u64::from(height);
        if area >= REFERENCE_AREA {
            return self.min_prompt_area.max(1);
        }
        let scaled = (u64::from(self.min_prompt_area) * area).div_ceil(REFERENCE_AREA);
        scaled.max(1) as u32
    }
}

/// A mask prompt together with the class it was cut from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassedPrompt {
    pub class_id: u8,
    pub prompt: PromptObject,
}

/// One prompt per 4-connected component of every non-ignore class with at
/// least `min_area` pixels. Object ids run from 1 in scan order.
pub fn masks_from_labelmap(
    labels: &LabelMap,
    table: &ClassTable,
    min_area: u32,
) -> Vec<ClassedPrompt> {
    let ignore = table.ignore_id();
    let (w, h) = labels.shape();
    connected_components(labels, |v| v != ignore)
        .into_iter()
        .filter(|c| c.pixels.len() >= min_area as usize)
        .enumerate()
        .map(|(i, c)| ClassedPrompt {
            class_id: c.value,
            prompt: PromptObject {
                object_id: i as u32 + 1,
                init_mask: BinaryMask::from_indices(w, h, c.pixels)
                    .expect("component inside frame")
                    .to_rle(),
            },
        })
        .collect()
}

/// Propagates `anchor` to the selected offsets of one clip.
///
/// `frames` maps anchor-relative offsets to backend image references. The
/// result always contains offset 0 (the anchor itself, untouched).
pub fn propagate_frames<B: Backend + ?Sized>(
    clip_id: &str,
    anchor: &LabelMap,
    frames: &BTreeMap<i32, String>,
    table: &ClassTable,
    config: &PropagationConfig,
    backend: &mut B,
) -> Result<BTreeMap<i32, LabelMap>> {
    config.validate()?;
    let (w, h) = anchor.shape();
    let prompts = masks_from_labelmap(anchor, table, config.effective_min_area(w, h));
    let classes: BTreeMap<u32, u8> = prompts
        .iter()
        .map(|p| (p.prompt.object_id, p.class_id))
        .collect();
    let objects: Vec<PromptObject> = prompts.into_iter().map(|p| p.prompt).collect();
    let blank = LabelMap::filled(w, h, table.ignore_id())?;

    let mut out = BTreeMap::from([(0, anchor.clone())]);
    for sign in [1i32, -1] {
        let wanted: BTreeSet<i32> = config
            .selected_offsets
            .iter()
            .copied()
            .filter(|o| o.signum() == sign)
            .collect();
        let Some(reach) = wanted.iter().map(|o| o.unsigned_abs()).max() else {
            continue;
        };
        if objects.is_empty() {
            out.extend(wanted.iter().map(|o| (*o, blank.clone())));
            continue;
        }
        // Session frames run away from the anchor, so the reversed pass is
        // an ordinary forward track over the reversed frame order.
        let refs = (0..=reach as i32)
            .map(|k| {
                frames
                    .get(&(sign * k))
                    .cloned()
                    .ok_or_else(|| Error::MissingFrame {
                        clip_id: clip_id.to_string(),
                        offset: sign * k,
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let session = backend.open_video(&refs)?;
        let tracked = backend
            .add_objects(&session.session_id, 0, &objects)
            .and_then(|_| backend.propagate(&session.session_id, Direction::Forward, reach));
        let closed = backend.close_session(&session.session_id);
        let results = tracked?;
        closed?;

        let mut by_offset: BTreeMap<i32, Vec<&MaskResult>> = BTreeMap::new();
        for r in &results {
            let offset = sign * r.frame_offset;
            if wanted.contains(&offset) {
                by_offset.entry(offset).or_default().push(r);
            }
        }
        for &offset in &wanted {
            let masks = by_offset.remove(&offset).unwrap_or_default();
            out.insert(
                offset,
                fuse(&blank, &masks, &classes, table, config.overlap_rule)?,
            );
        }
    }
    Ok(out)
}

/// Paints tracked masks over `blank` according to `rule`.
fn fuse(
    blank: &LabelMap,
    results: &[&MaskResult],
    classes: &BTreeMap<u32, u8>,
    table: &ClassTable,
    rule: OverlapRule,
) -> Result<LabelMap> {
    struct Entry {
        object_id: u32,
        class_id: u8,
        score: f64,
        area: usize,
        mask: BinaryMask,
    }
    let mut entries = Vec::with_capacity(results.len());
    for r in results {
        let class_id = *classes.get(&r.object_id).ok_or_else(|| {
            BackendError::Protocol(format!("backend returned unknown object {}", r.object_id))
        })?;
        let mask = r.mask.decode()?;
        if mask.shape() != blank.shape() {
            return Err(BackendError::ShapeMismatch(format!(
                "mask {}x{} vs frame {}x{}",
                mask.width(),
                mask.height(),
                blank.width(),
                blank.height()
            ))
            .into());
        }
        entries.push(Entry {
            object_id: r.object_id,
            class_id,
            score: r.score,
            area: mask.area(),
            mask,
        });
    }
    // Sort into paint order: the last entry ends up on top.
    entries.sort_by(|a, b| match rule {
        OverlapRule::Score => a
            .score
            .total_cmp(&b.score)
            .then(a.area.cmp(&b.area))
            .then(b.object_id.cmp(&a.object_id)),
        OverlapRule::AreaDesc => b.area.cmp(&a.area).then(a.object_id.cmp(&b.object_id)),
        OverlapRule::AreaAsc => a.area.cmp(&b.area).then(a.object_id.cmp(&b.object_id)),
    });
    let layers: Vec<(BinaryMask, u8)> = entries.into_iter().map(|e| (e.mask, e.class_id)).collect();
    compose_labelmap(blank, &layers, table)
}

/// Propagates one manifest clip. Keys of the result are anchor-relative.
pub fn propagate_clip<B: Backend + ?Sized>(
    clip: &Clip,
    base_dir: &Path,
    table: &ClassTable,
    config: &PropagationConfig,
    backend: &mut B,
) -> Result<BTreeMap<i32, LabelMap>> {
    let anchor = clip
        .anchor_annotation()
        .filter(|a| a.kind == AnnotationKind::Fine)
        .ok_or_else(|| Error::MissingAnchorAnnotation(clip.clip_id.clone()))?;
    let labels = load_labelmap(resolve_path(base_dir, &anchor.path), table)?;
    let frames = clip
        .frames
        .iter()
        .map(|f| {
            (
                clip.relative(f.offset),
                resolve_path(base_dir, &f.image_path)
                    .to_string_lossy()
                    .into_owned(),
            )
        })
        .collect();
    propagate_frames(&clip.clip_id, &labels, &frames, table, config, backend)
}

/// Runs [`propagate_clip`] over every clip, writing each generated raster to
/// `out_dir/<clip_id>/<offset>.png` (clip offset numbering).
///
/// Clips run in parallel on `jobs` workers, each with its own backend from
/// `make_backend`. A failing clip is reported in
/// [`BatchRun::failures`] and left unchanged. Selected offsets that
/// already carry a fine or coarse annotation keep it. Output clips are
/// sorted by id.
pub fn generate_manifest_pseudolabels<F, B>(
    manifest: &DatasetManifest,
    base_dir: &Path,
    table: &ClassTable,
    config: &PropagationConfig,
    out_dir: &Path,
    jobs: usize,
    make_backend: F,
) -> Result<BatchRun>
where
    F: Fn() -> std::result::Result<B, BackendError> + Sync,
    B: Backend,
{
    config.validate()?;
    let run_clip = |clip: &Clip| -> Result<Vec<Annotation>> {
        let mut backend = make_backend()?;
        let maps = propagate_clip(clip, base_dir, table, config, &mut backend)?;
        let mut added = Vec::new();
        for (rel, map) in maps.into_iter().filter(|(rel, _)| *rel != 0) {
            let offset = clip.absolute(rel);
            let path = out_dir.join(&clip.clip_id).join(format!("{offset}.png"));
            save_labelmap(&map, &path)?;
            added.push(Annotation {
                offset,
                path: path.to_string_lossy().into_owned(),
                kind: AnnotationKind::Generated,
            });
        }
        Ok(added)
    };
    let outcomes = run_parallel(jobs, &manifest.clips, run_clip)?;

    let mut result = manifest.clone();
    let mut failures = Vec::new();
    for (clip, outcome) in result.clips.iter_mut().zip(outcomes) {
        match outcome {
            Ok(added) => {
                for a in added {
                    let keep_existing = clip.annotation_at(a.offset).is_some_and(|e| {
                        matches!(e.kind, AnnotationKind::Fine | AnnotationKind::Coarse)
                    });
                    if keep_existing {
                        log::warn!(
                            "clip {}: keeping existing annotation at offset {}",
                            clip.clip_id,
                            a.offset
                        );
                    } else {
                        clip.set_annotation(a);
                    }
                }
            }
            Err(error) => {
                log::error!("clip {}: {error}", clip.clip_id);
                failures.push(ClipFailure {
                    clip_id: clip.clip_id.clone(),
                    error,
                });
            }
        }
    }
    Ok(BatchRun {
        manifest: result.sorted(),
        failures,
    })
}
