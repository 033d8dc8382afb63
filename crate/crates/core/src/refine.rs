//! Coarse annotation refinement.
//!
//! Two procedures live here. Prompted refinement re-segments each
//! whitelisted coarse instance from a few random points inside it and
//! paints the backend's masks back over the coarse map. Consensus
//! refinement takes class-agnostic proposals and relabels a proposal
//! wholesale when one class holds strictly more than `purity_threshold` of
//! the coarse-labelled pixels under it.

use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, BackendError, MaskResult, Point};
use crate::batch::{run_parallel, BatchRun, ClipFailure};
use crate::error::{Error, Result};
use crate::raster::{
    compose_labelmap, extract_instances, load_labelmap, resolve_path, save_labelmap, Annotation,
    AnnotationKind, BinaryMask, ClassTable, Clip, DatasetManifest, InstanceRecord, LabelMap,
};
use crate::seed::{derive_seed, rng_from_seed};

pub const DEFAULT_WHITELIST: [&str; 8] = [
    "pole",
    "traffic light",
    "traffic sign",
    "person",
    "rider",
    "car",
    "motorcycle",
    "bicycle",
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub whitelist: BTreeSet<String>,
    pub points_per_instance: u32,
    pub refine_iters: u32,
    pub rng_seed: u64,
    pub min_instance_area: u32,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            whitelist: DEFAULT_WHITELIST.iter().map(|s| s.to_string()).collect(),
            points_per_instance: 2,
            refine_iters: 2,
            rng_seed: 0,
            min_instance_area: 10,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self, table: &ClassTable) -> Result<()> {
        if self.points_per_instance == 0 {
            return Err(Error::InvalidConfig(
                "points_per_instance must be at least 1".into(),
            ));
        }
        for name in &self.whitelist {
            let id = table.id_of(name)?;
            if !table.is_instance_level(id) {
                return Err(Error::InvalidConfig(format!(
                    "whitelisted class {name:?} is not instance-level"
                )));
            }
        }
        Ok(())
    }

    fn whitelist_ids(&self, table: &ClassTable) -> Result<BTreeSet<u8>> {
        self.whitelist.iter().map(|n| table.id_of(n)).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaintOrder {
    /// Descending count of coarse-labelled pixels under the proposal.
    #[default]
    LabelledDesc,
    /// Descending proposal area.
    AreaDesc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsensusConfig {
    pub purity_threshold: f64,
    pub paint_order: PaintOrder,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        Self {
            purity_threshold: 0.9,
            paint_order: PaintOrder::LabelledDesc,
        }
    }
}

impl ConsensusConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.purity_threshold > 0.0 && self.purity_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "purity threshold {} outside (0, 1)",
                self.purity_threshold
            )));
        }
        Ok(())
    }
}

/// Draws `n` pixels of `mask` uniformly, without replacement when the mask
/// has at least `n` pixels and with replacement otherwise.
pub fn sample_points<R: Rng + ?Sized>(
    mask: &BinaryMask,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Point>> {
    let pixels: Vec<Point> = mask.points().collect();
    if pixels.is_empty() {
        return Err(Error::EmptyMask);
    }
    if pixels.len() >= n {
        Ok(index::sample(rng, pixels.len(), n)
            .into_iter()
            .map(|i| pixels[i])
            .collect())
    } else {
        Ok((0..n)
            .map(|_| pixels[rng.random_range(0..pixels.len())])
            .collect())
    }
}

/// Asks the backend to re-segment one instance from points sampled inside
/// its coarse mask. The result may extend beyond the coarse mask.
pub fn refine_instance<B: Backend + ?Sized, R: Rng + ?Sized>(
    image: &str,
    instance: &InstanceRecord,
    config: &RefineConfig,
    rng: &mut R,
    backend: &mut B,
) -> Result<BinaryMask> {
    let points = sample_points(&instance.mask, config.points_per_instance as usize, rng)?;
    let result = backend.segment_points(image, &points, config.refine_iters)?;
    let mask = result.mask.decode()?;
    if mask.shape() != instance.mask.shape() {
        return Err(BackendError::ShapeMismatch(format!(
            "refined mask {}x{} vs instance {}x{}",
            mask.width(),
            mask.height(),
            instance.mask.width(),
            instance.mask.height()
        ))
        .into());
    }
    Ok(mask)
}

#[derive(Debug)]
pub struct InstanceFailure {
    pub instance_id: u32,
    pub error: Error,
}

#[derive(Debug)]
pub struct RefineOutcome {
    pub labels: LabelMap,
    /// Instances whose refined mask was painted.
    pub refined: usize,
    /// Instances that fell back to their coarse mask.
    pub failures: Vec<InstanceFailure>,
}

/// Refines the whitelisted instances of `coarse` and paints them back,
/// largest first so thin structures end up on top. Instances below
/// `min_instance_area` are left as they are; instances whose backend call
/// fails are painted with their coarse mask instead.
pub fn refine_coarse_labelmap<B: Backend + ?Sized>(
    image: &str,
    coarse: &LabelMap,
    instances: &[InstanceRecord],
    table: &ClassTable,
    config: &RefineConfig,
    backend: &mut B,
) -> Result<RefineOutcome> {
    config.validate(table)?;
    let whitelist = config.whitelist_ids(table)?;
    let mut rng = rng_from_seed(config.rng_seed);
    let mut layers: Vec<(BinaryMask, u8)> = Vec::new();
    let mut failures = Vec::new();
    let mut refined = 0;
    for inst in instances {
        if !whitelist.contains(&inst.class_id)
            || inst.mask.area() < config.min_instance_area as usize
        {
            continue;
        }
        coarse.check_same_shape(inst.mask.width(), inst.mask.height())?;
        match refine_instance(image, inst, config, &mut rng, backend) {
            Ok(mask) => {
                refined += 1;
                layers.push((mask, inst.class_id));
            }
            Err(error) => {
                log::warn!(
                    "instance {}: {error}; keeping coarse mask",
                    inst.instance_id
                );
                failures.push(InstanceFailure {
                    instance_id: inst.instance_id,
                    error,
                });
                layers.push((inst.mask.clone(), inst.class_id));
            }
        }
    }
    // Stable: equal areas keep instance order.
    layers.sort_by_key(|(m, _)| std::cmp::Reverse(m.area()));
    Ok(RefineOutcome {
        labels: compose_labelmap(coarse, &layers, table)?,
        refined,
        failures,
    })
}

/// Relabels proposals whose coarse-labelled pixels are dominated by one
/// class (share strictly above the threshold) and paints them over
/// `coarse`.
pub fn consensus_refine(
    coarse: &LabelMap,
    proposals: &[MaskResult],
    table: &ClassTable,
    config: &ConsensusConfig,
) -> Result<LabelMap> {
    config.validate()?;
    let ignore = table.ignore_id();
    struct Accepted {
        index: usize,
        labelled: usize,
        area: usize,
        class_id: u8,
        mask: BinaryMask,
    }
    let mut accepted = Vec::new();
    for (index, p) in proposals.iter().enumerate() {
        let mask = p.mask.decode()?;
        coarse.check_same_shape(mask.width(), mask.height())?;
        let mut hist = [0usize; 256];
        for i in mask.indices() {
            hist[coarse.data()[i] as usize] += 1;
        }
        hist[ignore as usize] = 0;
        let labelled: usize = hist.iter().sum();
        if labelled == 0 {
            continue;
        }
        let (class_id, top) = hist
            .iter()
            .enumerate()
            .fold(
                (0u8, 0usize),
                |best, (c, &n)| if n > best.1 { (c as u8, n) } else { best },
            );
        let purity = top as f64 / labelled as f64;
        if purity > config.purity_threshold {
            accepted.push(Accepted {
                index,
                labelled,
                area: mask.area(),
                class_id,
                mask,
            });
        }
    }
    accepted.sort_by(|a, b| {
        let key = match config.paint_order {
            PaintOrder::LabelledDesc => b.labelled.cmp(&a.labelled),
            PaintOrder::AreaDesc => b.area.cmp(&a.area),
        };
        key.then(a.index.cmp(&b.index))
    });
    let layers: Vec<(BinaryMask, u8)> =
        accepted.into_iter().map(|a| (a.mask, a.class_id)).collect();
    compose_labelmap(coarse, &layers, table)
}

/// Applies `refine_frame` to every coarse annotation of every clip, writing
/// results to `out_dir/<clip_id>/<offset>.png` and marking them generated.
fn refine_manifest<F, B, P>(
    manifest: &DatasetManifest,
    base_dir: &Path,
    table: &ClassTable,
    out_dir: &Path,
    jobs: usize,
    make_backend: F,
    refine_frame: P,
) -> Result<BatchRun>
where
    F: Fn() -> std::result::Result<B, BackendError> + Sync,
    B: Backend,
    P: Fn(&mut B, &Clip, i32, &str, &LabelMap) -> Result<LabelMap> + Sync,
{
    let run_clip = |clip: &Clip| -> Result<Vec<Annotation>> {
        let coarse: Vec<&Annotation> = clip
            .annotations
            .iter()
            .filter(|a| a.kind == AnnotationKind::Coarse)
            .collect();
        if coarse.is_empty() {
            return Ok(Vec::new());
        }
        let mut backend = make_backend()?;
        let mut out = Vec::new();
        for ann in coarse {
            let frame = clip
                .frame_at(ann.offset)
                .ok_or_else(|| Error::MissingFrame {
                    clip_id: clip.clip_id.clone(),
                    offset: ann.offset,
                })?;
            let image = resolve_path(base_dir, &frame.image_path)
                .to_string_lossy()
                .into_owned();
            let labels = load_labelmap(resolve_path(base_dir, &ann.path), table)?;
            let refined = refine_frame(&mut backend, clip, ann.offset, &image, &labels)?;
            let path = out_dir
                .join(&clip.clip_id)
                .join(format!("{}.png", ann.offset));
            save_labelmap(&refined, &path)?;
            out.push(Annotation {
                offset: ann.offset,
                path: path.to_string_lossy().into_owned(),
                kind: AnnotationKind::Generated,
            });
        }
        Ok(out)
    };
    let outcomes = run_parallel(jobs, &manifest.clips, run_clip)?;
    let mut result = manifest.clone();
    let mut failures = Vec::new();
    for (clip, outcome) in result.clips.iter_mut().zip(outcomes) {
        match outcome {
            Ok(anns) => anns.into_iter().for_each(|a| clip.set_annotation(a)),
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

/// Prompted refinement over a manifest. Each frame's random stream is
/// derived from the configured seed and `<clip_id>:<offset>`, so results do
/// not depend on the number of workers.
pub fn refine_coarse_manifest<F, B>(
    manifest: &DatasetManifest,
    base_dir: &Path,
    table: &ClassTable,
    config: &RefineConfig,
    out_dir: &Path,
    jobs: usize,
    make_backend: F,
) -> Result<BatchRun>
where
    F: Fn() -> std::result::Result<B, BackendError> + Sync,
    B: Backend,
{
    config.validate(table)?;
    refine_manifest(
        manifest,
        base_dir,
        table,
        out_dir,
        jobs,
        make_backend,
        |backend, clip, offset, image, labels| {
            let instances = extract_instances(labels, None, table)?;
            let frame_config = RefineConfig {
                rng_seed: derive_seed(config.rng_seed, &format!("{}:{offset}", clip.clip_id)),
                ..config.clone()
            };
            let outcome =
                refine_coarse_labelmap(image, labels, &instances, table, &frame_config, backend)?;
            Ok(outcome.labels)
        },
    )
}

/// Consensus refinement over a manifest, using the backend's automatic
/// proposals for each coarse frame.
pub fn refine_consensus_manifest<F, B>(
    manifest: &DatasetManifest,
    base_dir: &Path,
    table: &ClassTable,
    config: &ConsensusConfig,
    out_dir: &Path,
    jobs: usize,
    make_backend: F,
) -> Result<BatchRun>
where
    F: Fn() -> std::result::Result<B, BackendError> + Sync,
    B: Backend,
{
    config.validate()?;
    refine_manifest(
        manifest,
        base_dir,
        table,
        out_dir,
        jobs,
        make_backend,
        |backend, _, _, image, labels| {
            let proposals = backend.auto_masks(image)?;
            consensus_refine(labels, &proposals, table, config)
        },
    )
}
