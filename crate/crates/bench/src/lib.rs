//! Seeded inputs shared by the benchmarks.

use std::collections::BTreeMap;

use annob_core::backend::{frame_ref, SyntheticScene};
use annob_core::seed::rng_from_seed;
use annob_core::{BinaryMask, LabelMap};
use rand::Rng;

pub const ROAD: u8 = 0;
pub const OBJECT_CLASSES: [u8; 8] = [5, 6, 7, 11, 12, 13, 17, 18];

/// A mask of blocky blobs, closer to real masks than per-pixel noise.
pub fn blob_mask(seed: u64, width: u32, height: u32) -> BinaryMask {
    let mut rng = rng_from_seed(seed);
    let mut mask = BinaryMask::empty(width, height).expect("non-zero size");
    for _ in 0..8 {
        let (x0, y0) = (rng.random_range(0..width), rng.random_range(0..height));
        let (w, h) = (
            rng.random_range(1..=width / 4 + 1),
            rng.random_range(1..=height / 4 + 1),
        );
        for y in y0..(y0 + h).min(height) {
            for x in x0..(x0 + w).min(width) {
                mask.set(x, y, true);
            }
        }
    }
    mask
}

/// A label map drawn from `classes` with noise, for metric benchmarks.
pub fn noisy_labels(seed: u64, width: u32, height: u32, classes: &[u8]) -> LabelMap {
    let mut rng = rng_from_seed(seed);
    let data = (0..width * height)
        .map(|_| classes[rng.random_range(0..classes.len())])
        .collect();
    LabelMap::new(width, height, data).expect("non-zero size")
}

/// One random synthetic scene with its 21 anchor-relative frame references.
pub fn scene_with_frames(
    seed: u64,
    width: u32,
    height: u32,
) -> (BTreeMap<String, SyntheticScene>, BTreeMap<i32, String>) {
    let mut rng = rng_from_seed(seed);
    let scene = SyntheticScene::random(&mut rng, width, height, 5, ROAD, &OBJECT_CLASSES);
    let frames = (-10..=10).map(|o| (o, frame_ref("bench", o))).collect();
    (BTreeMap::from([("bench".to_string(), scene)]), frames)
}
