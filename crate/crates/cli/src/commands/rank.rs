use std::path::PathBuf;

use annob_core::planner::{clip_motion_scores, diversity_rank, load_frame};
use anyhow::Result;
use clap::Args;

use super::{load_manifest, load_scenes, manifest_base, write_output, SceneMap};
use crate::GlobalArgs;

#[derive(Args)]
pub struct RankArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Frames between the anchor and the compared frame
    #[arg(long, default_value_t = 10, allow_hyphen_values = true)]
    step: i32,
    /// CSV path [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(g: &GlobalArgs, args: RankArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let scenes = match &g.synthetic {
        Some(path) => load_scenes(path)?,
        None => SceneMap::new(),
    };
    let scores = clip_motion_scores(&manifest, &manifest_base(&args.manifest), args.step, |p| {
        load_frame(p, &scenes)
    })?;
    let ids: Vec<String> = manifest.clips.iter().map(|c| c.clip_id.clone()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["clip_id", "motion"])?;
    for id in diversity_rank(&ids, &scores)? {
        w.write_record([id.as_str(), &format!("{:.4}", scores[&id])])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    write_output(args.out.as_deref(), &String::from_utf8(bytes)?)
}
