//! Exact analytic backend over moving-rectangle scenes.
//!
//! A scene is a background class plus rectangles that translate with a
//! constant integer velocity. Objects are drawn in list order, so later
//! objects occlude earlier ones. An object's `appear_offset` controls when
//! it exists: `0` means always, a positive value `a` means only at offsets
//! `>= a`, a negative value `a` only at offsets `<= a`. Objects with a
//! non-zero `appear_offset` are therefore never visible at the anchor.
//!
//! Frames are addressed by reference strings `synth:<scene_id>:<offset>`;
//! no files are read.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    Backend, BackendError, BackendSession, Direction, MaskResult, Point, PromptObject, SessionKind,
};
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, LabelMap};

const FRAME_REF_PREFIX: &str = "synth:";

pub fn frame_ref(scene_id: &str, offset: i32) -> String {
    format!("{FRAME_REF_PREFIX}{scene_id}:{offset}")
}

pub fn parse_frame_ref(reference: &str) -> Option<(&str, i32)> {
    let rest = reference.strip_prefix(FRAME_REF_PREFIX)?;
    let (scene, offset) = rest.rsplit_once(':')?;
    Some((scene, offset.parse().ok()?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: u32,
    pub h: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneObject {
    pub object_id: u32,
    pub class_id: u8,
    /// Position at the anchor frame.
    pub rect: Rect,
    /// Pixels per frame.
    pub velocity: (i32, i32),
    #[serde(default)]
    pub appear_offset: i32,
}

impl SceneObject {
    pub fn is_present(&self, offset: i32) -> bool {
        match self.appear_offset {
            0 => true,
            a if a > 0 => offset >= a,
            a => offset <= a,
        }
    }

    pub fn rect_at(&self, offset: i32) -> Rect {
        Rect {
            x: self.rect.x + self.velocity.0 * offset,
            y: self.rect.y + self.velocity.1 * offset,
            ..self.rect
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Element {
    Background,
    Object(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub width: u32,
    pub height: u32,
    pub objects: Vec<SceneObject>,
    pub background_class: u8,
}

impl SyntheticScene {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidDimensions {
                width: self.width,
                height: self.height,
            });
        }
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if o.object_id == 0 || !ids.insert(o.object_id) {
                return Err(Error::InvalidConfig(format!(
                    "scene object ids must be unique and non-zero, got {}",
                    o.object_id
                )));
            }
        }
        Ok(())
    }

    /// Clipped pixel bounds `[x0, x1) x [y0, y1)` of a rectangle.
    fn clip(&self, r: Rect) -> Option<(u32, u32, u32, u32)> {
        let x0 = r.x.max(0) as i64;
        let y0 = r.y.max(0) as i64;
        let x1 = (i64::from(r.x) + i64::from(r.w)).min(i64::from(self.width));
        let y1 = (i64::from(r.y) + i64::from(r.h)).min(i64::from(self.height));
        (x0 < x1 && y0 < y1).then_some((x0 as u32, x1 as u32, y0 as u32, y1 as u32))
    }

    /// Index of the object visible at each pixel, `None` for background.
    fn owners(&self, offset: i32) -> Vec<Option<usize>> {
        let w = self.width as usize;
        let mut out = vec![None; w * self.height as usize];
        for (i, o) in self.objects.iter().enumerate() {
            if !o.is_present(offset) {
                continue;
            }
            if let Some((x0, x1, y0, y1)) = self.clip(o.rect_at(offset)) {
                for y in y0..y1 {
                    let row = y as usize * w;
                    out[row + x0 as usize..row + x1 as usize].fill(Some(i));
                }
            }
        }
        out
    }

    fn element_at(owners: &[Option<usize>], idx: usize) -> Element {
        owners[idx].map_or(Element::Background, Element::Object)
    }

    fn elements_mask(&self, owners: &[Option<usize>], elements: &BTreeSet<Element>) -> BinaryMask {
        let bits = (0..owners.len())
            .map(|i| elements.contains(&Self::element_at(owners, i)))
            .collect();
        BinaryMask::new(self.width, self.height, bits).expect("scene shape is valid")
    }

    /// Visible pixels of object `index` at `offset`.
    pub fn visible_mask(&self, index: usize, offset: i32) -> BinaryMask {
        let owners = self.owners(offset);
        self.elements_mask(&owners, &BTreeSet::from([Element::Object(index)]))
    }

    /// Visible background pixels at `offset`.
    pub fn background_mask(&self, offset: i32) -> BinaryMask {
        let owners = self.owners(offset);
        self.elements_mask(&owners, &BTreeSet::from([Element::Background]))
    }

    /// Full clipped rectangle of object `index` at `offset`, ignoring
    /// occlusion. Empty if the object is absent or outside the frame.
    pub fn extent_mask(&self, index: usize, offset: i32) -> BinaryMask {
        let o = &self.objects[index];
        let mut m = BinaryMask::empty(self.width, self.height).expect("scene shape is valid");
        if o.is_present(offset) {
            if let Some((x0, x1, y0, y1)) = self.clip(o.rect_at(offset)) {
                for y in y0..y1 {
                    for x in x0..x1 {
                        m.set(x, y, true);
                    }
                }
            }
        }
        m
    }

    /// Semantic label map of the frame at `offset`.
    pub fn label_map(&self, offset: i32) -> LabelMap {
        let data = self
            .owners(offset)
            .into_iter()
            .map(|o| o.map_or(self.background_class, |i| self.objects[i].class_id))
            .collect();
        LabelMap::new(self.width, self.height, data).expect("scene shape is valid")
    }

    /// Label map of the frame at `offset` where pixels of objects not
    /// visible at the anchor are replaced by `ignore_id`. This is everything
    /// a tracker seeded at the anchor can know about the frame.
    pub fn anchor_truth(&self, offset: i32, ignore_id: u8) -> LabelMap {
        let seen: BTreeSet<usize> = self.owners(0).into_iter().flatten().collect();
        let data = self
            .owners(offset)
            .into_iter()
            .map(|o| match o {
                None => self.background_class,
                Some(i) if seen.contains(&i) => self.objects[i].class_id,
                Some(_) => ignore_id,
            })
            .collect();
        LabelMap::new(self.width, self.height, data).expect("scene shape is valid")
    }

    /// A random scene with up to `max_objects` objects of the given
    /// classes. About a third of the objects appear only away from the
    /// anchor.
    pub fn random<R: Rng>(
        rng: &mut R,
        width: u32,
        height: u32,
        max_objects: usize,
        background_class: u8,
        object_classes: &[u8],
    ) -> Self {
        let n = rng.random_range(0..=max_objects);
        let objects = (0..n)
            .map(|i| {
                let w = rng.random_range(3..=(width / 2).max(3));
                let h = rng.random_range(3..=(height / 2).max(3));
                let appear_offset = if rng.random_bool(1.0 / 3.0) {
                    let a = rng.random_range(1..=10);
                    if rng.random_bool(0.5) {
                        a
                    } else {
                        -a
                    }
                } else {
                    0
                };
                SceneObject {
                    object_id: i as u32 + 1,
                    class_id: object_classes[rng.random_range(0..object_classes.len())],
                    rect: Rect {
                        x: rng.random_range(0..width as i32),
                        y: rng.random_range(0..height as i32),
                        w,
                        h,
                    },
                    velocity: (rng.random_range(-2..=2), rng.random_range(-2..=2)),
                    appear_offset,
                }
            })
            .collect();
        Self {
            width,
            height,
            objects,
            background_class,
        }
    }
}

struct TrackedObject {
    object_id: u32,
    frame_index: usize,
    elements: BTreeSet<Element>,
}

struct VideoSession {
    scene_id: String,
    offsets: Vec<i32>,
    objects: Vec<TrackedObject>,
}

/// In-process backend that answers every operation analytically.
///
/// Tracking: a prompt mask claims every scene element (object or
/// background) visible under it at the prompt frame, and its track on
/// another frame is the union of those elements' visible pixels there.
/// `segment_points` returns the full clipped rectangle of the topmost
/// object under the first point (or the visible background);
/// `refine_iters` has no effect. `auto_masks` returns the visible extent of
/// every present object followed by the background.
#[derive(Default)]
pub struct SyntheticBackend {
    scenes: Arc<BTreeMap<String, SyntheticScene>>,
    sessions: BTreeMap<String, VideoSession>,
    next_session: u64,
}

impl SyntheticBackend {
    pub fn new(scenes: impl Into<Arc<BTreeMap<String, SyntheticScene>>>) -> Self {
        Self {
            scenes: scenes.into(),
            ..Self::default()
        }
    }

    pub fn scenes(&self) -> &BTreeMap<String, SyntheticScene> {
        &self.scenes
    }

    fn resolve(&self, reference: &str) -> Result<(&str, &SyntheticScene, i32), BackendError> {
        let (scene_id, offset) = parse_frame_ref(reference).ok_or_else(|| {
            BackendError::BadRequest(format!("not a synthetic frame: {reference:?}"))
        })?;
        let (key, scene) = self
            .scenes
            .get_key_value(scene_id)
            .ok_or_else(|| BackendError::BadRequest(format!("unknown scene {scene_id:?}")))?;
        Ok((key.as_str(), scene, offset))
    }

    fn mask_result(object_id: u32, frame_offset: i32, mask: &BinaryMask) -> MaskResult {
        MaskResult {
            object_id,
            frame_offset,
            mask: mask.to_rle(),
            score: 1.0,
        }
    }
}

impl Backend for SyntheticBackend {
    fn open_video(&mut self, frames: &[String]) -> Result<BackendSession, BackendError> {
        if frames.is_empty() {
            return Err(BackendError::BadRequest(
                "video needs at least one frame".into(),
            ));
        }
        let mut scene_id = None;
        let mut offsets = Vec::with_capacity(frames.len());
        for f in frames {
            let (id, _, offset) = self.resolve(f)?;
            match scene_id {
                None => scene_id = Some(id.to_string()),
                Some(ref s) if s != id => {
                    return Err(BackendError::BadRequest(
                        "frames span several scenes".into(),
                    ))
                }
                Some(_) => {}
            }
            offsets.push(offset);
        }
        self.next_session += 1;
        let session_id = format!("s{}", self.next_session);
        self.sessions.insert(
            session_id.clone(),
            VideoSession {
                scene_id: scene_id.expect("non-empty frame list"),
                offsets,
                objects: Vec::new(),
            },
        );
        Ok(BackendSession {
            session_id,
            kind: SessionKind::Video,
            frame_count: frames.len() as u32,
        })
    }

    fn add_objects(
        &mut self,
        session_id: &str,
        frame_index: u32,
        objects: &[PromptObject],
    ) -> Result<(), BackendError> {
        let session = self
            .sessions
            .get_mut(session_id)
            .ok_or_else(|| BackendError::SessionNotFound(session_id.to_string()))?;
        let scene = &self.scenes[&session.scene_id];
        let frame_index = frame_index as usize;
        let offset = *session.offsets.get(frame_index).ok_or_else(|| {
            BackendError::BadRequest(format!("frame index {frame_index} outside session"))
        })?;
        let mut ids: BTreeSet<u32> = session.objects.iter().map(|o| o.object_id).collect();
        let mut decoded = Vec::with_capacity(objects.len());
        for p in objects {
            if !ids.insert(p.object_id) {
                return Err(BackendError::DuplicateObjectId(p.object_id));
            }
            let mask = p
                .init_mask
                .decode()
                .map_err(|e| BackendError::ShapeMismatch(e.to_string()))?;
            if mask.shape() != (scene.width, scene.height) {
                return Err(BackendError::ShapeMismatch(format!(
                    "mask {}x{} vs frame {}x{}",
                    mask.width(),
                    mask.height(),
                    scene.width,
                    scene.height
                )));
            }
            decoded.push((p.object_id, mask));
        }
        let owners = scene.owners(offset);
        for (object_id, mask) in decoded {
            let elements = mask
                .indices()
                .map(|i| SyntheticScene::element_at(&owners, i))
                .collect();
            session.objects.push(TrackedObject {
                object_id,
                frame_index,
                elements,
            });
        }
        Ok(())
    }

    fn propagate(
        &mut self,
        session_id: &str,
        direction: Direction,
        horizon: u32,
    ) -> Result<Vec<MaskResult>, BackendError> {
        let session = self
            .sessions
            .get(session_id)
            .ok_or_else(|| BackendError::SessionNotFound(session_id.to_string()))?;
        let scene = &self.scenes[&session.scene_id];
        let mut owners_cache: BTreeMap<i32, Vec<Option<usize>>> = BTreeMap::new();
        let mut out = Vec::new();
        for k in 1..=horizon as i64 {
            for obj in &session.objects {
                let target = obj.frame_index as i64 + i64::from(direction.sign()) * k;
                if target < 0 || target >= session.offsets.len() as i64 {
                    continue;
                }
                let offset = session.offsets[target as usize];
                let owners = owners_cache
                    .entry(offset)
                    .or_insert_with(|| scene.owners(offset));
                let mask = scene.elements_mask(owners, &obj.elements);
                out.push(Self::mask_result(
                    obj.object_id,
                    direction.sign() * k as i32,
                    &mask,
                ));
            }
        }
        Ok(out)
    }

    fn segment_points(
        &mut self,
        image: &str,
        points: &[Point],
        _refine_iters: u32,
    ) -> Result<MaskResult, BackendError> {
        let (_, scene, offset) = self.resolve(image)?;
        if points.is_empty() {
            return Err(BackendError::BadRequest(
                "at least one point is required".into(),
            ));
        }
        if let Some(&(x, y)) = points
            .iter()
            .find(|(x, y)| *x >= scene.width || *y >= scene.height)
        {
            return Err(BackendError::PointOutOfBounds(x, y));
        }
        let (px, py) = points[0];
        let hit = scene.objects.iter().enumerate().rev().find(|(_, o)| {
            o.is_present(offset)
                && scene
                    .clip(o.rect_at(offset))
                    .is_some_and(|(x0, x1, y0, y1)| {
                        (x0..x1).contains(&px) && (y0..y1).contains(&py)
                    })
        });
        let mask = match hit {
            Some((i, _)) => scene.extent_mask(i, offset),
            None => scene.background_mask(offset),
        };
        Ok(Self::mask_result(0, 0, &mask))
    }

    fn auto_masks(&mut self, image: &str) -> Result<Vec<MaskResult>, BackendError> {
        let (_, scene, offset) = self.resolve(image)?;
        let owners = scene.owners(offset);
        let mut out = Vec::new();
        for (i, o) in scene.objects.iter().enumerate() {
            let mask = scene.elements_mask(&owners, &BTreeSet::from([Element::Object(i)]));
            if !mask.is_empty() {
                out.push(Self::mask_result(o.object_id, 0, &mask));
            }
        }
        let bg = scene.elements_mask(&owners, &BTreeSet::from([Element::Background]));
        if !bg.is_empty() {
            out.push(Self::mask_result(0, 0, &bg));
        }
        Ok(out)
    }

    fn close_session(&mut self, session_id: &str) -> Result<(), BackendError> {
        self.sessions
            .remove(session_id)
            .map(|_| ())
            .ok_or_else(|| BackendError::SessionNotFound(session_id.to_string()))
    }
}
