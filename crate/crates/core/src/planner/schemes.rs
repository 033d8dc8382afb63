use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::budget::Percent;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Manual,
    Generated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Slots spread across the clip's horizon.
    Distributed,
    /// Slots on adjacent frames.
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub offset: i32,
    pub source: Source,
}

/// A frame-mixing recipe: one slot per clip group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixScheme {
    pub name: String,
    pub slots: Vec<Slot>,
    pub layout: Layout,
}

pub const PREDEFINED_SCHEMES: [&str; 15] = [
    "N1", "P2", "P2s", "F2", "F2s", "B2n", "B3", "B3s", "B5", "B5s", "B7", "B9", "B11", "P11",
    "F11",
];

impl MixScheme {
    pub fn new(name: impl Into<String>, slots: Vec<Slot>, layout: Layout) -> Result<Self> {
        let scheme = Self {
            name: name.into(),
            slots,
            layout,
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "scheme {} has no slots",
                self.name
            )));
        }
        let offsets: BTreeSet<i32> = self.slots.iter().map(|s| s.offset).collect();
        if offsets.len() != self.slots.len() {
            return Err(Error::InvalidConfig(format!(
                "scheme {} repeats an offset",
                self.name
            )));
        }
        Ok(())
    }

    /// Looks up one of the predefined schemes by name.
    pub fn predefined(name: &str) -> Result<Self> {
        use Layout::{Distributed as D, Sequential as S};
        let (offsets, layout): (&[i32], Layout) = match name {
            "N1" => (&[0], D),
            "P2" => (&[-10, 0], D),
            "P2s" => (&[-1, 0], S),
            "F2" => (&[0, 10], D),
            "F2s" => (&[0, 1], S),
            "B2n" => (&[-10, 10], D),
            "B3" => (&[-10, 0, 10], D),
            "B3s" => (&[-1, 0, 1], S),
            "B5" => (&[-10, -5, 0, 5, 10], D),
            "B5s" => (&[-2, -1, 0, 1, 2], S),
            "B7" => (&[-10, -7, -3, 0, 3, 7, 10], D),
            "B9" => (&[-10, -7, -5, -3, 0, 3, 5, 7, 10], D),
            "B11" => (&[-10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10], D),
            "P11" => (&[-10, -9, -8, -7, -6, -5, -4, -3, -2, -1, 0], S),
            "F11" => (&[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10], S),
            _ => return Err(Error::UnknownScheme(name.to_string())),
        };
        // The anchor frame is the only manually annotated one.
        let slots = offsets
            .iter()
            .map(|&offset| Slot {
                offset,
                source: if offset == 0 {
                    Source::Manual
                } else {
                    Source::Generated
                },
            })
            .collect();
        Self::new(name, slots, layout)
    }

    pub fn all_predefined() -> Vec<Self> {
        PREDEFINED_SCHEMES
            .iter()
            .map(|n| Self::predefined(n).expect("predefined scheme"))
            .collect()
    }

    pub fn k(&self) -> usize {
        self.slots.len()
    }

    pub fn manual_slots(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| s.source == Source::Manual)
            .count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub clip_id: String,
    pub offset: i32,
    pub source: Source,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePlan {
    pub scheme: String,
    pub seed: u64,
    pub num_clips: usize,
    pub group_sizes: Vec<usize>,
    pub assignments: Vec<Assignment>,
}

impl FramePlan {
    pub fn total_samples(&self) -> usize {
        self.assignments.len()
    }

    pub fn manual_samples(&self) -> usize {
        self.assignments
            .iter()
            .filter(|a| a.source == Source::Manual)
            .count()
    }
}

/// Shuffles the clips by `seed` and splits them into `k` groups of
/// `ceil(n / k)` clips, reusing the head of the shuffle to fill the last
/// group. Group `i` takes slot `i` of the scheme. Duplicate ids are merged.
///
/// When `n >= k - 1` every clip contributes one or two samples.
pub fn build_frame_plan(clip_ids: &[String], scheme: &MixScheme, seed: u64) -> Result<FramePlan> {
    scheme.validate()?;
    let mut clips: Vec<&String> = clip_ids
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if clips.is_empty() {
        return Err(Error::EmptyClipList);
    }
    clips.shuffle(&mut rng_from_seed(seed));
    let k = scheme.k();
    let group = clips.len().div_ceil(k);
    let assignments = clips
        .iter()
        .cycle()
        .take(k * group)
        .enumerate()
        .map(|(i, clip)| {
            let slot = scheme.slots[i / group];
            Assignment {
                clip_id: (*clip).clone(),
                offset: slot.offset,
                source: slot.source,
            }
        })
        .collect();
    Ok(FramePlan {
        scheme: scheme.name.clone(),
        seed,
        num_clips: clips.len(),
        group_sizes: vec![group; k],
        assignments,
    })
}

pub fn manual_percent(plan: &FramePlan) -> Percent {
    Percent::of(plan.manual_samples() as u64, plan.total_samples() as u64)
}
