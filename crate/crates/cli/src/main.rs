//! Batch front end: train a model from a dataset manifest, run inference,
//! evaluate predictions, or generate synthetic datasets.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

mod commands;

use clap::{error::ErrorKind as ClapErrorKind, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use chm::ChmError;

#[derive(Parser)]
#[command(name = "chm", version, about = "Contextual hierarchical pixel labeling")]
struct Cli {
    /// Worker thread count (0 = all cores); the CHM_WORKERS environment
    /// variable overrides this flag.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a dataset manifest.
    Train {
        /// Dataset manifest (JSON) with a train split.
        manifest: PathBuf,
        /// Output model directory.
        #[arg(long, short)]
        out: PathBuf,
        /// Configuration file (JSON, same schema as the model manifest's
        /// config block). Defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Training seed; overrides the config file's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run inference with a trained model.
    Predict {
        /// Model directory written by `train`.
        model: PathBuf,
        /// A single image file or a dataset manifest (test split is used).
        input: PathBuf,
        /// Output directory for probability and label images.
        #[arg(long, short)]
        out: PathBuf,
        /// Average over half, original and double resolution.
        #[arg(long)]
        multiscale: bool,
        /// Thin the output with non-maximum suppression.
        #[arg(long)]
        nms: bool,
        /// Threshold for the label image (binary models).
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Score predictions against groundtruth.
    Eval {
        /// Directory of predictions written by `predict`.
        predictions: PathBuf,
        /// Dataset manifest; the test split is evaluated.
        manifest: PathBuf,
        /// Report file (JSON). PR curves are written next to it.
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Threshold for binary label scores.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        /// Matching tolerance as a fraction of the image diagonal
        /// (edge task).
        #[arg(long, default_value_t = chm::metrics::DEFAULT_BOUNDARY_TOLERANCE)]
        tolerance: f64,
    },
    /// Generate a deterministic synthetic dataset.
    Synth {
        /// Dataset kind: textures, textures3, bars, or xor-blobs.
        kind: String,
        /// Number of images (or points for xor-blobs).
        #[arg(long, default_value_t = 70)]
        count: usize,
        /// Image side length.
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long, short)]
        out: PathBuf,
        /// Fraction of images assigned to the train split.
        #[arg(long, default_value_t = 0.7)]
        train_fraction: f64,
    },
}

fn exit_code_for(err: &ChmError) -> u8 {
    match err {
        ChmError::InvalidConfig(_) => 1,
        ChmError::Internal(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    // usage errors exit with 1, not clap's default 2
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let is_help = matches!(
                err.kind(),
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if is_help {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let workers = std::env::var("CHM_WORKERS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(cli.workers);
    if workers > 0 {
        commands::configure_workers(workers);
    }
    let result = match cli.command {
        Command::Train {
            manifest,
            out,
            config,
            seed,
        } => commands::train(&manifest, &out, config.as_deref(), seed),
        Command::Predict {
            model,
            input,
            out,
            multiscale,
            nms,
            threshold,
        } => commands::predict(&model, &input, &out, multiscale, nms, threshold),
        Command::Eval {
            predictions,
            manifest,
            out,
            threshold,
            tolerance,
        } => commands::eval(&predictions, &manifest, out.as_deref(), threshold, tolerance),
        Command::Synth {
            kind,
            count,
            size,
            seed,
            out,
            train_fraction,
        } => commands::synth(&kind, count, size, seed, &out, train_fraction),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
