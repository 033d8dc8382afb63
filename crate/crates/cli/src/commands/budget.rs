use std::fs;
use std::path::{Path, PathBuf};

use annob_core::planner::{
    budget_report, build_frame_plan, BudgetModel, BudgetReport, CoarseMix, FramePlan, MixScheme,
    PREDEFINED_SCHEMES,
};
use anyhow::{Context, Result};
use clap::Args;
use serde::de::DeserializeOwned;

use super::{write_output, UsageError};
use crate::GlobalArgs;

#[derive(Args)]
pub struct BudgetArgs {
    /// Plan JSON produced by `annob plan` (repeatable)
    #[arg(long)]
    plan: Vec<PathBuf>,
    /// Mix JSON produced by `annob mix` (repeatable)
    #[arg(long)]
    mix: Vec<PathBuf>,
    /// Price every predefined scheme on --num-clips clips
    #[arg(long, requires = "num_clips")]
    all_schemes: bool,
    #[arg(long)]
    num_clips: Option<usize>,
    #[arg(long, default_value_t = 90)]
    fine_minutes: u64,
    #[arg(long, default_value_t = 7)]
    coarse_minutes: u64,
    #[arg(long, default_value_t = 0)]
    generated_minutes: u64,
    /// CSV path [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn run(_g: &GlobalArgs, args: BudgetArgs) -> Result<()> {
    let model = BudgetModel {
        fine_minutes: args.fine_minutes,
        coarse_minutes: args.coarse_minutes,
        generated_minutes: args.generated_minutes,
    };
    let mut reports: Vec<BudgetReport> = Vec::new();
    for path in &args.plan {
        reports.push(budget_report(&read_json::<FramePlan>(path)?, &model)?);
    }
    for path in &args.mix {
        reports.push(budget_report(&read_json::<CoarseMix>(path)?, &model)?);
    }
    if args.all_schemes {
        let n = args.num_clips.unwrap_or(0);
        let ids: Vec<String> = (0..n).map(|i| format!("clip{i:05}")).collect();
        // Group sizes and sources do not depend on the shuffle.
        for name in PREDEFINED_SCHEMES {
            let plan = build_frame_plan(&ids, &MixScheme::predefined(name)?, 0)?;
            reports.push(budget_report(&plan, &model)?);
        }
    }
    if reports.is_empty() {
        return Err(
            UsageError("nothing to price: pass --plan, --mix or --all-schemes".into()).into(),
        );
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &reports {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    write_output(args.out.as_deref(), &String::from_utf8(bytes)?)
}
