use std::path::PathBuf;

use annob_core::refine::{
    refine_coarse_manifest, refine_consensus_manifest, ConsensusConfig, PaintOrder, RefineConfig,
};
use annob_core::ClassTable;
use anyhow::Result;
use clap::{Args, ValueEnum};

use super::{
    backend_factory, finish_batch, jobs, load_manifest, manifest_base, prepare_out_dir,
    require_seed,
};
use crate::GlobalArgs;

#[derive(Args)]
pub struct RefineCoarseArgs {
    /// Manifest whose coarse annotations are refined
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for refined label maps
    #[arg(long)]
    out: PathBuf,
    /// Updated manifest path [default: <OUT>/manifest.json]
    #[arg(long)]
    out_manifest: Option<PathBuf>,
    /// Classes to refine [default: the eight thin and countable classes]
    #[arg(long, value_delimiter = ',')]
    whitelist: Option<Vec<String>>,
    #[arg(long, default_value_t = 2)]
    points_per_instance: u32,
    #[arg(long, default_value_t = 2)]
    refine_iters: u32,
    /// Instances smaller than this keep their coarse mask
    #[arg(long, default_value_t = 10)]
    min_instance_area: u32,
}

pub fn run_coarse(g: &GlobalArgs, args: RefineCoarseArgs) -> Result<()> {
    let seed = require_seed(g)?;
    let manifest = load_manifest(&args.manifest)?;
    let table = ClassTable::by_name(&manifest.class_table_name)?;
    let mut config = RefineConfig {
        points_per_instance: args.points_per_instance,
        refine_iters: args.refine_iters,
        rng_seed: seed,
        min_instance_area: args.min_instance_area,
        ..RefineConfig::default()
    };
    if let Some(names) = args.whitelist {
        config.whitelist = names.into_iter().filter(|n| !n.is_empty()).collect();
    }
    config.validate(&table)?;
    let make_backend = backend_factory(g)?;
    let out = prepare_out_dir(&args.out)?;
    let run = refine_coarse_manifest(
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

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PaintOrderArg {
    LabelledDesc,
    AreaDesc,
}

#[derive(Args)]
pub struct RefineConsensusArgs {
    /// Manifest whose coarse annotations are refined
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for refined label maps
    #[arg(long)]
    out: PathBuf,
    /// Updated manifest path [default: <OUT>/manifest.json]
    #[arg(long)]
    out_manifest: Option<PathBuf>,
    /// A proposal is relabelled when its majority share is strictly above this
    #[arg(long, default_value_t = 0.9)]
    purity_threshold: f64,
    #[arg(long, value_enum, default_value = "labelled-desc")]
    paint_order: PaintOrderArg,
}

pub fn run_consensus(g: &GlobalArgs, args: RefineConsensusArgs) -> Result<()> {
    let manifest = load_manifest(&args.manifest)?;
    let table = ClassTable::by_name(&manifest.class_table_name)?;
    let config = ConsensusConfig {
        purity_threshold: args.purity_threshold,
        paint_order: match args.paint_order {
            PaintOrderArg::LabelledDesc => PaintOrder::LabelledDesc,
            PaintOrderArg::AreaDesc => PaintOrder::AreaDesc,
        },
    };
    config.validate()?;
    let make_backend = backend_factory(g)?;
    let out = prepare_out_dir(&args.out)?;
    let run = refine_consensus_manifest(
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
