use std::path::{Path, PathBuf};

use annob_core::backend::{frame_ref, SyntheticScene};
use annob_core::raster::{Annotation, FrameEntry, CITYSCAPES_TABLE_NAME};
use annob_core::refine::DEFAULT_WHITELIST;
use annob_core::seed::{derive_seed, rng_from_seed};
use annob_core::{save_labelmap, AnnotationKind, ClassTable, Clip, DatasetManifest, LabelMap};
use anyhow::Result;
use clap::Args;

use super::{prepare_out_dir, require_seed, to_json_text, write_output, SceneMap};
use crate::GlobalArgs;

/// Clip offset of the anchor; frames run from 0 to `ANCHOR + HORIZON`.
const ANCHOR: i32 = 19;
const HORIZON: i32 = 10;

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    scenes: usize,
    #[arg(long, default_value_t = 64)]
    width: u32,
    #[arg(long, default_value_t = 48)]
    height: u32,
    #[arg(long, default_value_t = 5)]
    max_objects: usize,
}

/// Keeps a pixel only when its four neighbours exist and share its label,
/// which shrinks every region the way a hurried annotator would.
fn erode(labels: &LabelMap, ignore: u8) -> LabelMap {
    let (w, h) = labels.shape();
    let mut out = LabelMap::filled(w, h, ignore).expect("shape is valid");
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let v = labels.get(x, y);
            let interior = [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
                .iter()
                .all(|&(nx, ny)| labels.get(nx, ny) == v);
            if interior {
                out.set(x, y, v);
            }
        }
    }
    out
}

fn annotation(
    root: &Path,
    dir: &str,
    scene: &str,
    offset: i32,
    map: &LabelMap,
    kind: AnnotationKind,
) -> Result<Annotation> {
    let rel = format!("{dir}/{scene}/{offset}.png");
    save_labelmap(map, root.join(&rel))?;
    Ok(Annotation {
        offset,
        path: rel,
        kind,
    })
}

/// Writes `scenes.json` plus three manifests over the same clips:
/// `manifest.json` (fine anchor), `coarse.json` (eroded anchor) and
/// `gt.json` (anchor-trackable truth on every frame within the horizon).
pub fn run(g: &GlobalArgs, args: SynthArgs) -> Result<()> {
    let seed = require_seed(g)?;
    let table = ClassTable::cityscapes();
    let ignore = table.ignore_id();
    let road = table.id_of("road")?;
    let classes: Vec<u8> = DEFAULT_WHITELIST
        .iter()
        .map(|n| table.id_of(n))
        .collect::<annob_core::Result<_>>()?;
    let root = prepare_out_dir(&args.out)?;

    let mut scenes = SceneMap::new();
    let mut fine = DatasetManifest::new(CITYSCAPES_TABLE_NAME);
    let mut coarse = fine.clone();
    let mut gt = fine.clone();
    for i in 0..args.scenes {
        let id = format!("scene{i:03}");
        let mut rng = rng_from_seed(derive_seed(seed, &id));
        let scene = SyntheticScene::random(
            &mut rng,
            args.width,
            args.height,
            args.max_objects,
            road,
            &classes,
        );
        let clip = Clip {
            clip_id: id.clone(),
            frames: (0..=ANCHOR + HORIZON)
                .map(|o| FrameEntry {
                    offset: o,
                    image_path: frame_ref(&id, o - ANCHOR),
                })
                .collect(),
            anchor_offset: ANCHOR,
            annotations: Vec::new(),
        };
        let mut gt_clip = clip.clone();
        for rel in -HORIZON..=HORIZON {
            let map = scene.anchor_truth(rel, ignore);
            gt_clip.set_annotation(annotation(
                &root,
                "gt",
                &id,
                ANCHOR + rel,
                &map,
                AnnotationKind::Fine,
            )?);
        }
        let anchor = scene.label_map(0);
        let mut fine_clip = clip.clone();
        fine_clip.set_annotation(Annotation {
            offset: ANCHOR,
            path: format!("gt/{id}/{ANCHOR}.png"),
            kind: AnnotationKind::Fine,
        });
        let mut coarse_clip = clip;
        let eroded = erode(&anchor, ignore);
        coarse_clip.set_annotation(annotation(
            &root,
            "coarse",
            &id,
            ANCHOR,
            &eroded,
            AnnotationKind::Coarse,
        )?);
        fine.clips.push(fine_clip);
        coarse.clips.push(coarse_clip);
        gt.clips.push(gt_clip);
        scenes.insert(id, scene);
    }
    write_output(Some(&root.join("scenes.json")), &to_json_text(&scenes)?)?;
    fine.save(root.join("manifest.json"))?;
    coarse.save(root.join("coarse.json"))?;
    gt.save(root.join("gt.json"))?;
    Ok(())
}
