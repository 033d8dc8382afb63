use std::fs;
use std::path::{Path, PathBuf};

use annob_core::planner::{coarse_mix_plan, CoarseMixSpec};
use anyhow::{Context, Result};
use clap::Args;

use super::{require_seed, to_json_text, write_output};
use crate::GlobalArgs;

#[derive(Args)]
pub struct MixArgs {
    /// Share of coarse samples in [0, 1]
    #[arg(long)]
    coarse_fraction: f64,
    #[arg(long, default_value_t = 2975)]
    total_samples: usize,
    /// File with one finely annotated sample id per line
    #[arg(
        long,
        required_unless_present = "fine_count",
        conflicts_with = "fine_count"
    )]
    fine_pool: Option<PathBuf>,
    /// Use generated ids fine00000..fineN-1
    #[arg(long)]
    fine_count: Option<usize>,
    /// File with one coarsely annotated sample id per line
    #[arg(
        long,
        required_unless_present = "coarse_count",
        conflicts_with = "coarse_count"
    )]
    coarse_pool: Option<PathBuf>,
    /// Use generated ids coarse00000..coarseN-1
    #[arg(long)]
    coarse_count: Option<usize>,
    /// Mix JSON path [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

fn pool(path: Option<&Path>, count: Option<usize>, prefix: &str) -> Result<Vec<String>> {
    match (path, count) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect())
        }
        (None, n) => Ok((0..n.unwrap_or(0))
            .map(|i| format!("{prefix}{i:05}"))
            .collect()),
    }
}

pub fn run(g: &GlobalArgs, args: MixArgs) -> Result<()> {
    let seed = require_seed(g)?;
    let spec = CoarseMixSpec {
        total_samples: args.total_samples,
        coarse_fraction: args.coarse_fraction,
        seed,
    };
    let fine = pool(args.fine_pool.as_deref(), args.fine_count, "fine")?;
    let coarse = pool(args.coarse_pool.as_deref(), args.coarse_count, "coarse")?;
    let mix = coarse_mix_plan(&fine, &coarse, &spec)?;
    write_output(args.out.as_deref(), &to_json_text(&mix)?)
}
