use std::path::PathBuf;

use annob_core::propagation::{generate_manifest_pseudolabels, OverlapRule, PropagationConfig};
use annob_core::ClassTable;
use anyhow::Result;
use clap::{Args, ValueEnum};

use super::{backend_factory, finish_batch, jobs, load_manifest, manifest_base, prepare_out_dir};
use crate::GlobalArgs;

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OverlapArg {
    Score,
    AreaDesc,
    AreaAsc,
}

impl From<OverlapArg> for OverlapRule {
    fn from(a: OverlapArg) -> Self {
        match a {
            OverlapArg::Score => OverlapRule::Score,
            OverlapArg::AreaDesc => OverlapRule::AreaDesc,
            OverlapArg::AreaAsc => OverlapRule::AreaAsc,
        }
    }
}

#[derive(Args)]
pub struct PropagateArgs {
    /// Input dataset manifest
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for generated label maps
    #[arg(long)]
    out: PathBuf,
    /// Updated manifest path [default: <OUT>/manifest.json]
    #[arg(long)]
    out_manifest: Option<PathBuf>,
    /// Largest distance from the anchor that may be selected
    #[arg(long, default_value_t = 10)]
    horizon: u32,
    /// Anchor-relative offsets to generate
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-10, 10])]
    offsets: Vec<i32>,
    /// Smallest component used as a prompt, in pixels at 1920x1080
    #[arg(long, default_value_t = 100)]
    min_prompt_area: u32,
    /// How overlapping tracks are resolved
    #[arg(long, value_enum, default_value = "score")]
    overlap_rule: OverlapArg,
}

pub fn run(g: &GlobalArgs, args: PropagateArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let table = ClassTable::by_name(&manifest.class_table_name)?;
    let config = PropagationConfig {
        horizon: args.horizon,
        min_prompt_area: args.min_prompt_area,
        overlap_rule: args.overlap_rule.into(),
        selected_offsets: args.offsets,
    };
    config.validate()?;
    let make_backend = backend_factory(g)?;
    let out = prepare_out_dir(&args.out)?;
    let run = generate_manifest_pseudolabels(
        &manifest,
        &manifest_base(&args.manifest),
        &table,
        &config,
        &out,
        jobs(g),
        make_backend,
    )?;
    finish_batch(
        &run,
        &manifest_base(&args.manifest),
        &args
            .out_manifest
            .unwrap_or_else(|| out.join("manifest.json")),
    )
}
