//! Dataset-construction arithmetic: frame-mixing schemes, coarse/fine mixes,
//! the annotation budget model and motion-based clip ranking.

mod budget;
mod diversity;
mod mix;
mod schemes;

pub use budget::{budget_report, BudgetModel, BudgetReport, Costed, Percent};
pub use diversity::{
    clip_motion_scores, diversity_rank, load_frame, load_gray, mean_abs_difference,
};
pub use mix::{coarse_count, coarse_mix_plan, CoarseMix, CoarseMixSpec, MixSample};
pub use schemes::{
    build_frame_plan, manual_percent, Assignment, FramePlan, Layout, MixScheme, Slot, Source,
    PREDEFINED_SCHEMES,
};
