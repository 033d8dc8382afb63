mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use commands::{
    budget, evaluate, mix, plan, plot_data, propagate, rank, refine, serve, synth, UsageError,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "annob",
    version,
    about = "Pseudo-labels, coarse refinement and budget planning for video segmentation datasets"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct GlobalArgs {
    /// Backend executable speaking the JSON-lines protocol (falls back to ANNOB_BACKEND_CMD)
    #[arg(long, global = true)]
    backend_cmd: Option<String>,

    /// Serve backend requests in-process from a synthetic scenes file
    #[arg(long, global = true, value_name = "SCENES_JSON")]
    synthetic: Option<PathBuf>,

    /// Seed for every randomized step; required by stochastic commands
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for per-clip pipelines
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: u64,

    /// Log filter (error, warn, info, debug, trace)
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate each clip's anchor annotation to neighbouring frames
    Propagate(propagate::PropagateArgs),
    /// Refine coarse instances by point-prompted segmentation
    RefineCoarse(refine::RefineCoarseArgs),
    /// Relabel automatic proposals that agree with the coarse labels
    RefineConsensus(refine::RefineConsensusArgs),
    /// Assign clips to the slots of a frame-mixing scheme
    Plan(plan::PlanArgs),
    /// Draw a fixed-size coarse/fine sample mix
    Mix(mix::MixArgs),
    /// Price plans and mixes in annotation minutes
    Budget(budget::BudgetArgs),
    /// Score predicted label maps against ground truth
    Evaluate(evaluate::EvaluateArgs),
    /// Reshape training results into a long-format plotting table
    PlotData(plot_data::PlotDataArgs),
    /// Rank clips by a frame-difference motion proxy
    RankClips(rank::RankArgs),
    /// Generate synthetic scenes with matching manifests
    Synth(synth::SynthArgs),
    /// Answer backend protocol requests on stdin/stdout from --synthetic scenes
    ServeSynthetic,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.global.log_level)
        .init();

    let g = &cli.global;
    let result = match cli.command {
        Command::Propagate(args) => propagate::run(g, args),
        Command::RefineCoarse(args) => refine::run_coarse(g, args),
        Command::RefineConsensus(args) => refine::run_consensus(g, args),
        Command::Plan(args) => plan::run(g, args),
        Command::Mix(args) => mix::run(g, args),
        Command::Budget(args) => budget::run(g, args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::PlotData(args) => plot_data::run(args),
        Command::RankClips(args) => rank::run(g, args),
        Command::Synth(args) => synth::run(g, args),
        Command::ServeSynthetic => serve::run(g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

/// The error chain joined by ": ", skipping causes already quoted by the
/// message before them.
fn describe(err: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in err.chain() {
        let part = cause.to_string();
        if !text.contains(&part) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&part);
        }
    }
    text
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<annob_core::Error>() {
            if e.is_io()
                || matches!(
                    e,
                    annob_core::Error::Backend(annob_core::BackendError::Unavailable(_))
                )
            {
                return EXIT_IO;
            }
        }
        if matches!(
            cause.downcast_ref::<annob_core::BackendError>(),
            Some(annob_core::BackendError::Unavailable(_))
        ) {
            return EXIT_IO;
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            if e.is_io_error() {
                return EXIT_IO;
            }
        }
    }
    EXIT_VALIDATION
}
