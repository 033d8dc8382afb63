use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnnotationKind {
    Fine,
    Coarse,
    Generated,
    None,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameEntry {
    pub offset: i32,
    pub image_path: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub offset: i32,
    pub path: String,
    pub kind: AnnotationKind,
}

/// One video clip. Offsets are in the clip's own frame numbering;
/// [`Clip::relative`] maps them onto the anchor-relative convention used by
/// the pipelines (anchor = 0).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clip {
    pub clip_id: String,
    pub frames: Vec<FrameEntry>,
    pub anchor_offset: i32,
    #[serde(default)]
    pub annotations: Vec<Annotation>,
}

impl Clip {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::InvalidManifest(format!(
                "clip {:?}: {msg}",
                self.clip_id
            )))
        };
        let mut offsets = BTreeSet::new();
        for f in &self.frames {
            if !offsets.insert(f.offset) {
                return bad(format!("duplicate frame offset {}", f.offset));
            }
        }
        if !offsets.contains(&self.anchor_offset) {
            return bad(format!("anchor offset {} has no frame", self.anchor_offset));
        }
        let mut seen = BTreeSet::new();
        for a in &self.annotations {
            if !seen.insert(a.offset) {
                return bad(format!("more than one annotation at offset {}", a.offset));
            }
        }
        Ok(())
    }

    /// Offset relative to the anchor frame.
    pub fn relative(&self, offset: i32) -> i32 {
        offset - self.anchor_offset
    }

    /// Clip offset of an anchor-relative offset.
    pub fn absolute(&self, relative: i32) -> i32 {
        self.anchor_offset + relative
    }

    pub fn frame_at(&self, offset: i32) -> Option<&FrameEntry> {
        self.frames.iter().find(|f| f.offset == offset)
    }

    pub fn annotation_at(&self, offset: i32) -> Option<&Annotation> {
        self.annotations.iter().find(|a| a.offset == offset)
    }

    pub fn anchor_annotation(&self) -> Option<&Annotation> {
        self.annotation_at(self.anchor_offset)
    }

    /// Inserts or replaces the annotation at `annotation.offset`, keeping
    /// annotations sorted by offset.
    pub fn set_annotation(&mut self, annotation: Annotation) {
        self.annotations.retain(|a| a.offset != annotation.offset);
        self.annotations.push(annotation);
        self.annotations.sort_by_key(|a| a.offset);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub class_table_name: String,
    pub clips: Vec<Clip>,
}

impl DatasetManifest {
    pub fn new(class_table_name: impl Into<String>) -> Self {
        Self {
            class_table_name: class_table_name.into(),
            clips: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for c in &self.clips {
            if !ids.insert(c.clip_id.as_str()) {
                return Err(Error::InvalidManifest(format!(
                    "duplicate clip id {:?}",
                    c.clip_id
                )));
            }
            c.validate()?;
        }
        Ok(())
    }

    pub fn clip(&self, clip_id: &str) -> Option<&Clip> {
        self.clips.iter().find(|c| c.clip_id == clip_id)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Rewrites every relative frame and annotation path as `base` joined
    /// with it, so the manifest can be saved outside `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut String| *p = resolve_path(base, p).to_string_lossy().into_owned();
        for clip in &mut self.clips {
            clip.frames.iter_mut().for_each(|f| fix(&mut f.image_path));
            clip.annotations.iter_mut().for_each(|a| fix(&mut a.path));
        }
    }

    /// Clips sorted by id.
    pub fn sorted(mut self) -> Self {
        self.clips.sort_by(|a, b| a.clip_id.cmp(&b.clip_id));
        self
    }
}

/// Resolves a path stored in a manifest against the manifest's directory.
/// Absolute paths and non-file references (containing `:` before any
/// separator, e.g. `synth:scene:0`) are returned unchanged.
pub fn resolve_path(base: &Path, stored: &str) -> PathBuf {
    let p = Path::new(stored);
    if p.is_absolute() || is_reference(stored) {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub(crate) fn is_reference(stored: &str) -> bool {
    match stored.find(':') {
        Some(i) => !stored[..i].contains('/') && i > 1,
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rebase_keeps_absolute_paths_and_references() {
        let mut m = DatasetManifest::new("cityscapes");
        m.clips.push(Clip {
            clip_id: "c".into(),
            frames: vec![
                FrameEntry {
                    offset: 0,
                    image_path: "synth:c:0".into(),
                },
                FrameEntry {
                    offset: 1,
                    image_path: "img/1.png".into(),
                },
            ],
            anchor_offset: 0,
            annotations: vec![Annotation {
                offset: 0,
                path: "/abs/0.png".into(),
                kind: AnnotationKind::Fine,
            }],
        });
        m.rebase(Path::new("/data"));
        let c = &m.clips[0];
        assert_eq!(c.frames[0].image_path, "synth:c:0");
        assert_eq!(c.frames[1].image_path, "/data/img/1.png");
        assert_eq!(c.annotations[0].path, "/abs/0.png");
    }

    const SAMPLE: &str = r#"{
  "class_table_name": "cityscapes",
  "clips": [
    {
      "clip_id": "aachen_000000",
      "frames": [
        {"offset": -1, "image_path": "img/a_-1.png"},
        {"offset": 0, "image_path": "img/a_0.png"}
      ],
      "anchor_offset": 0,
      "annotations": [{"offset": 0, "path": "gt/a.png", "kind": "fine"}]
    }
  ]
}"#;

    #[test]
    fn parses_exact_field_names() {
        let m = DatasetManifest::from_json(SAMPLE).unwrap();
        assert_eq!(m.clips[0].frames.len(), 2);
        assert_eq!(
            m.clips[0].anchor_annotation().unwrap().kind,
            AnnotationKind::Fine
        );
        let again = DatasetManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_duplicate_clip_ids() {
        let mut m = DatasetManifest::from_json(SAMPLE).unwrap();
        m.clips.push(m.clips[0].clone());
        assert!(matches!(m.validate(), Err(Error::InvalidManifest(_))));
    }

    #[test]
    fn rejects_anchor_without_frame() {
        let mut m = DatasetManifest::from_json(SAMPLE).unwrap();
        m.clips[0].anchor_offset = 5;
        assert!(m.validate().is_err());
    }

    #[test]
    fn rejects_two_annotations_at_one_offset() {
        let mut m = DatasetManifest::from_json(SAMPLE).unwrap();
        let a = m.clips[0].annotations[0].clone();
        m.clips[0].annotations.push(a);
        assert!(m.validate().is_err());
    }

    #[test]
    fn cityscapes_frame_numbers_normalise_to_anchor() {
        let clip = Clip {
            clip_id: "c".into(),
            frames: (1..=30)
                .map(|i| FrameEntry {
                    offset: i,
                    image_path: format!("{i}.png"),
                })
                .collect(),
            anchor_offset: 20,
            annotations: vec![],
        };
        assert_eq!(clip.relative(20), 0);
        assert_eq!(clip.relative(10), -10);
        assert_eq!(clip.relative(30), 10);
        assert_eq!(clip.relative(1), -19);
        assert_eq!(clip.absolute(-10), 10);
    }

    #[test]
    fn set_annotation_keeps_order() {
        let mut clip: Clip = DatasetManifest::from_json(SAMPLE).unwrap().clips.remove(0);
        let ann = |offset, kind| Annotation {
            offset,
            path: format!("{offset}.png"),
            kind,
        };
        clip.set_annotation(ann(10, AnnotationKind::Generated));
        clip.set_annotation(ann(-10, AnnotationKind::Generated));
        clip.set_annotation(ann(0, AnnotationKind::Coarse));
        let offsets: Vec<i32> = clip.annotations.iter().map(|a| a.offset).collect();
        assert_eq!(offsets, vec![-10, 0, 10]);
        assert_eq!(clip.annotation_at(0).unwrap().kind, AnnotationKind::Coarse);
    }

    #[test]
    fn resolves_relative_paths_only() {
        let base = Path::new("/data/m");
        assert_eq!(resolve_path(base, "x/y.png"), Path::new("/data/m/x/y.png"));
        assert_eq!(resolve_path(base, "/abs.png"), Path::new("/abs.png"));
        assert_eq!(resolve_path(base, "synth:s0:3"), Path::new("synth:s0:3"));
    }
}
