use std::path::PathBuf;

use annob_core::planner::{build_frame_plan, MixScheme};
use anyhow::Result;
use clap::Args;

use super::{load_manifest, require_seed, to_json_text, write_output};
use crate::GlobalArgs;

#[derive(Args)]
pub struct PlanArgs {
    /// Scheme name, e.g. N1, B3, B11
    #[arg(long)]
    scheme: String,
    /// Take clip ids from this manifest
    #[arg(
        long,
        conflicts_with = "num_clips",
        required_unless_present = "num_clips"
    )]
    manifest: Option<PathBuf>,
    /// Use generated ids clip00000..clipN-1
    #[arg(long)]
    num_clips: Option<usize>,
    /// Plan JSON path [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn clip_ids(manifest: Option<&PathBuf>, num_clips: Option<usize>) -> Result<Vec<String>> {
    Ok(match (manifest, num_clips) {
        (Some(path), _) => load_manifest(path)?
            .clips
            .into_iter()
            .map(|c| c.clip_id)
            .collect(),
        (None, Some(n)) => (0..n).map(|i| format!("clip{i:05}")).collect(),
        (None, None) => Vec::new(),
    })
}

pub fn run(g: &GlobalArgs, args: PlanArgs) -> Result<()> {
    let scheme = MixScheme::predefined(&args.scheme)?;
    let seed = require_seed(g)?;
    let ids = clip_ids(args.manifest.as_ref(), args.num_clips)?;
    let plan = build_frame_plan(&ids, &scheme, seed)?;
    write_output(args.out.as_deref(), &to_json_text(&plan)?)
}
