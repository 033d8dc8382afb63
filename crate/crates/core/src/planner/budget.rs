use std::fmt;

use serde::{Deserialize, Serialize};

use super::mix::CoarseMix;
use super::schemes::{FramePlan, Source};
use crate::error::{Error, Result};
use crate::raster::AnnotationKind;

/// A percentage held as an integer number of hundredths, rounded half up.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent(pub u64);

impl Percent {
    /// `100 * num / den`; zero when `den` is zero.
    pub fn of(num: u64, den: u64) -> Self {
        if den == 0 {
            return Percent(0);
        }
        let scaled = num as u128 * 10_000;
        let den = den as u128;
        Percent(((2 * scaled + den) / (2 * den)) as u64)
    }

    pub fn hundredths(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

/// Minutes of human effort per annotated image.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetModel {
    pub fine_minutes: u64,
    pub coarse_minutes: u64,
    pub generated_minutes: u64,
}

impl Default for BudgetModel {
    fn default() -> Self {
        Self {
            fine_minutes: 90,
            coarse_minutes: 7,
            generated_minutes: 0,
        }
    }
}

impl BudgetModel {
    pub fn cost(&self, kind: AnnotationKind) -> u64 {
        match kind {
            AnnotationKind::Fine => self.fine_minutes,
            AnnotationKind::Coarse => self.coarse_minutes,
            AnnotationKind::Generated => self.generated_minutes,
            AnnotationKind::None => 0,
        }
    }
}

/// Anything whose samples can be priced.
pub trait Costed {
    fn label(&self) -> String;
    fn sample_kinds(&self) -> Vec<AnnotationKind>;
    /// Number of finely annotated images the all-fine baseline pays for.
    fn baseline_samples(&self) -> u64;
}

impl Costed for FramePlan {
    fn label(&self) -> String {
        self.scheme.clone()
    }

    fn sample_kinds(&self) -> Vec<AnnotationKind> {
        self.assignments
            .iter()
            .map(|a| match a.source {
                Source::Manual => AnnotationKind::Fine,
                Source::Generated => AnnotationKind::Generated,
            })
            .collect()
    }

    /// One manual frame per clip.
    fn baseline_samples(&self) -> u64 {
        self.num_clips as u64
    }
}

impl Costed for CoarseMix {
    fn label(&self) -> String {
        format!(
            "coarse{}",
            Percent::of(self.coarse_samples() as u64, self.samples.len() as u64)
        )
    }

    fn sample_kinds(&self) -> Vec<AnnotationKind> {
        self.samples.iter().map(|s| s.kind).collect()
    }

    fn baseline_samples(&self) -> u64 {
        self.samples.len() as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BudgetReport {
    pub scheme: String,
    /// Share of samples carrying human-made labels, fine or coarse.
    pub manual_pct: String,
    pub total_samples: u64,
    pub minutes: u64,
    pub pct_of_baseline: String,
}

pub fn budget_report(input: &impl Costed, model: &BudgetModel) -> Result<BudgetReport> {
    let kinds = input.sample_kinds();
    if kinds.contains(&AnnotationKind::None) {
        return Err(Error::InvalidConfig("sample without annotation".into()));
    }
    let manual = kinds
        .iter()
        .filter(|k| matches!(k, AnnotationKind::Fine | AnnotationKind::Coarse))
        .count() as u64;
    let minutes = kinds.iter().map(|k| model.cost(*k)).sum();
    let baseline = input.baseline_samples() * model.fine_minutes;
    Ok(BudgetReport {
        scheme: input.label(),
        manual_pct: Percent::of(manual, kinds.len() as u64).to_string(),
        total_samples: kinds.len() as u64,
        minutes,
        pct_of_baseline: Percent::of(minutes, baseline).to_string(),
    })
}
