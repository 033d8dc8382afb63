//! Manifest-level drivers over an on-disk dataset whose frames are
//! synthetic references.

use std::collections::BTreeMap;
use std::path::Path;

use annob_core::backend::{frame_ref, Rect, SceneObject, SyntheticBackend, SyntheticScene};
use annob_core::propagation::{generate_manifest_pseudolabels, PropagationConfig};
use annob_core::refine::{
    refine_coarse_manifest, refine_consensus_manifest, ConsensusConfig, RefineConfig,
};
use annob_core::{
    load_labelmap, save_labelmap, Annotation, AnnotationKind, BackendError, ClassTable, Clip,
    DatasetManifest, Error, FrameEntry, LabelMap,
};
use tempfile::tempdir;

const CAR: u8 = 13;
const PERSON: u8 = 11;
const ANCHOR: i32 = 10;

fn scene(dx: i32) -> SyntheticScene {
    SyntheticScene {
        width: 24,
        height: 12,
        background_class: 0,
        objects: vec![
            SceneObject {
                object_id: 1,
                class_id: CAR,
                rect: Rect {
                    x: 4,
                    y: 2,
                    w: 8,
                    h: 5,
                },
                velocity: (dx, 0),
                appear_offset: 0,
            },
            SceneObject {
                object_id: 2,
                class_id: PERSON,
                rect: Rect {
                    x: 15,
                    y: 3,
                    w: 5,
                    h: 6,
                },
                velocity: (0, 0),
                appear_offset: 0,
            },
        ],
    }
}

fn scenes() -> BTreeMap<String, SyntheticScene> {
    (0..5).map(|i| (format!("c{i}"), scene(i - 2))).collect()
}

/// Clips c0..c4 with frames 0..=20 (anchor 10); the anchor carries `kind`
/// written from `labels`.
fn dataset(
    root: &Path,
    kind: AnnotationKind,
    labels: impl Fn(&SyntheticScene) -> LabelMap,
) -> DatasetManifest {
    let mut m = DatasetManifest::new("cityscapes");
    for (id, scene) in scenes() {
        let rel = format!("ann/{id}.png");
        save_labelmap(&labels(&scene), root.join(&rel)).unwrap();
        m.clips.push(Clip {
            clip_id: id.clone(),
            frames: (0..=20)
                .map(|o| FrameEntry {
                    offset: o,
                    image_path: frame_ref(&id, o - ANCHOR),
                })
                .collect(),
            anchor_offset: ANCHOR,
            annotations: vec![Annotation {
                offset: ANCHOR,
                path: rel,
                kind,
            }],
        });
    }
    m
}

fn synthetic() -> impl Fn() -> Result<SyntheticBackend, BackendError> + Sync {
    let scenes = std::sync::Arc::new(scenes());
    move || Ok(SyntheticBackend::new(std::sync::Arc::clone(&scenes)))
}

#[test]
fn pseudolabels_match_truth_for_any_job_count() {
    let dir = tempdir().unwrap();
    let table = ClassTable::cityscapes();
    let m = dataset(dir.path(), AnnotationKind::Fine, |s| s.label_map(0));
    let config = PropagationConfig::default();
    let mut outputs = Vec::new();
    for jobs in [1, 4] {
        let out = dir.path().join(format!("out{jobs}"));
        let run = generate_manifest_pseudolabels(
            &m,
            dir.path(),
            &table,
            &config,
            &out,
            jobs,
            synthetic(),
        )
        .unwrap();
        assert!(run.failures.is_empty(), "{:?}", run.failures);
        let mut maps = Vec::new();
        for clip in &run.manifest.clips {
            let scene = &scenes()[&clip.clip_id];
            assert_eq!(clip.annotations.len(), 3);
            for ann in clip
                .annotations
                .iter()
                .filter(|a| a.kind == AnnotationKind::Generated)
            {
                let map = load_labelmap(&ann.path, &table).unwrap();
                assert_eq!(map, scene.anchor_truth(ann.offset - ANCHOR, 255));
                maps.push(map);
            }
        }
        outputs.push(maps);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn existing_annotations_survive_and_failures_are_isolated() {
    let dir = tempdir().unwrap();
    let table = ClassTable::cityscapes();
    let mut m = dataset(dir.path(), AnnotationKind::Fine, |s| s.label_map(0));
    // c1 already has a fine frame at +10; c3 loses its anchor annotation.
    save_labelmap(
        &LabelMap::filled(24, 12, PERSON).unwrap(),
        dir.path().join("ann/keep.png"),
    )
    .unwrap();
    m.clips[1].set_annotation(Annotation {
        offset: ANCHOR + 10,
        path: "ann/keep.png".into(),
        kind: AnnotationKind::Fine,
    });
    m.clips[3].annotations.clear();
    let out = dir.path().join("out");
    let run = generate_manifest_pseudolabels(
        &m,
        dir.path(),
        &table,
        &PropagationConfig::default(),
        &out,
        2,
        synthetic(),
    )
    .unwrap();
    assert_eq!(run.failures.len(), 1);
    assert_eq!(run.failures[0].clip_id, "c3");
    assert!(matches!(
        run.failures[0].error,
        Error::MissingAnchorAnnotation(_)
    ));
    assert_eq!(run.manifest.clips[3], m.clips[3]);
    let kept = run.manifest.clips[1].annotation_at(ANCHOR + 10).unwrap();
    assert_eq!(kept.path, "ann/keep.png");
    assert_eq!(kept.kind, AnnotationKind::Fine);
}

/// Coarse labels: each object shrunk to its interior, background ignored.
fn coarse_of(s: &SyntheticScene) -> LabelMap {
    let full = s.label_map(0);
    let (w, h) = full.shape();
    let mut out = LabelMap::filled(w, h, 255).unwrap();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let v = full.get(x, y);
            if v != 0
                && [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
                    .iter()
                    .all(|&(a, b)| full.get(a, b) == v)
            {
                out.set(x, y, v);
            }
        }
    }
    out
}

#[test]
fn prompted_refinement_restores_objects_and_is_seed_stable() {
    let dir = tempdir().unwrap();
    let table = ClassTable::cityscapes();
    let m = dataset(dir.path(), AnnotationKind::Coarse, coarse_of);
    let config = RefineConfig {
        rng_seed: 9,
        ..RefineConfig::default()
    };
    let mut bytes = Vec::new();
    for jobs in [1, 3] {
        let out = dir.path().join(format!("refined{jobs}"));
        let run = refine_coarse_manifest(&m, dir.path(), &table, &config, &out, jobs, synthetic())
            .unwrap();
        assert!(run.failures.is_empty(), "{:?}", run.failures);
        let mut files = Vec::new();
        for clip in &run.manifest.clips {
            let ann = clip.anchor_annotation().unwrap();
            assert_eq!(ann.kind, AnnotationKind::Generated);
            let map = load_labelmap(&ann.path, &table).unwrap();
            let truth = scenes()[&clip.clip_id].label_map(0);
            for class in [CAR, PERSON] {
                assert_eq!(
                    map.class_mask(class),
                    truth.class_mask(class),
                    "{}",
                    clip.clip_id
                );
            }
            files.push(std::fs::read(&ann.path).unwrap());
        }
        bytes.push(files);
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn consensus_refinement_fills_proposals() {
    let dir = tempdir().unwrap();
    let table = ClassTable::cityscapes();
    let m = dataset(dir.path(), AnnotationKind::Coarse, coarse_of);
    let out = dir.path().join("consensus");
    let run = refine_consensus_manifest(
        &m,
        dir.path(),
        &table,
        &ConsensusConfig::default(),
        &out,
        2,
        synthetic(),
    )
    .unwrap();
    assert!(run.failures.is_empty(), "{:?}", run.failures);
    for clip in &run.manifest.clips {
        let ann = clip.anchor_annotation().unwrap();
        // The coarse map has no road, so the background proposal stays
        // unlabelled while both objects are filled exactly.
        let map = load_labelmap(&ann.path, &table).unwrap();
        let truth = scenes()[&clip.clip_id].label_map(0);
        for class in [CAR, PERSON] {
            assert_eq!(map.class_mask(class), truth.class_mask(class));
        }
        assert_eq!(map.class_mask(0).area(), 0);
    }
}
