//! `hot` — batch front-end for the amplitude-transfer and harmonic
//! optimal-transport pipeline: generate synthetic clips, stylize them,
//! compute token descriptors, align token sequences, score heart-rate
//! agreement, and sweep parameter grids. All outputs are tensors, CSV, and
//! `key=value` stdout lines; given identical inputs and seeds every command
//! is byte-identical on rerun.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input or configuration.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hot_core::tensor_io::read_config;
use hot_core::RunConfig;

use commands::{DescriptorArgs, SweepGrid};
use error::CliError;

#[derive(Parser)]
#[command(
    name = "hot",
    version,
    about = "Amplitude transfer + harmonic transport pipeline"
)]
struct Cli {
    /// key=value run configuration file; built-in defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed overriding the configuration's `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory output files are written into
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate clip.tensor, ref.tensor, and gt.csv from a scene spec
    Synth {
        /// key=value scene spec file; built-in defaults when omitted
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Reference frame tint as r,g,b
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        ref_tint: Option<Vec<f64>>,
        /// Reference frame illumination gradient as gx,gy
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        ref_illum: Option<Vec<f64>>,
    },
    /// Swap a clip's low-frequency amplitudes for a reference frame's
    Fda {
        /// Rank-4 [frames, channels, height, width] clip tensor
        #[arg(long)]
        clip: PathBuf,
        /// Rank-3 [channels, height, width] reference frame tensor
        #[arg(long)]
        reference: PathBuf,
    },
    /// Pool features into tokens and compute per-token harmonic ratios
    Descriptor {
        /// Rank-4 [dim, steps, height, width] feature tensor
        #[arg(long)]
        features: Option<PathBuf>,
        /// Token rate in Hz of the --features tensor
        #[arg(long)]
        rate: Option<f64>,
        /// Clip tensor to run the surrogate feature extractor on
        #[arg(long)]
        clip: Option<PathBuf>,
        /// Frame rate in Hz of the --clip tensor
        #[arg(long)]
        fps: Option<f64>,
        /// Feature dimensionality of the surrogate extractor
        #[arg(long)]
        dim: Option<usize>,
        /// Temporal pooling stride of the surrogate extractor
        #[arg(long)]
        stride: Option<usize>,
        /// Use pooled pixels directly as features (dim must equal channels)
        #[arg(long)]
        identity_lift: bool,
    },
    /// Align two feature tensors with entropic optimal transport
    Align {
        /// Rank-4 feature tensor for the left side
        #[arg(long)]
        features_a: PathBuf,
        /// Rank-4 feature tensor for the right side
        #[arg(long)]
        features_b: PathBuf,
        /// Token rate in Hz shared by both tensors
        #[arg(long)]
        rate: f64,
    },
    /// Heart-rate agreement metrics between two signal tables
    Eval {
        /// Ground-truth signal CSV (one column per clip)
        #[arg(long)]
        gt: PathBuf,
        /// Predicted signal CSV (same column count)
        #[arg(long)]
        pred: PathBuf,
    },
    /// Run the synthetic pipeline over a (beta, lambda_h, iterations) grid
    Sweep {
        /// key=value scene spec file for every cell
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Mask ratios, comma-separated
        #[arg(long, value_delimiter = ',', default_value = "0.0,0.05,0.1")]
        betas: Vec<f64>,
        /// Harmonic cost weights, comma-separated
        #[arg(long, value_delimiter = ',', default_value = "0.0,0.3")]
        lambdas: Vec<f64>,
        /// Solver iteration counts, comma-separated
        #[arg(long, value_delimiter = ',', default_value = "10,40")]
        iters: Vec<usize>,
    },
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => read_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;

    match &cli.command {
        Command::Synth {
            spec,
            ref_tint,
            ref_illum,
        } => commands::cmd_synth(
            &config,
            &cli.out,
            spec.as_deref(),
            ref_tint.as_deref(),
            ref_illum.as_deref(),
        ),
        Command::Fda { clip, reference } => commands::cmd_fda(&config, &cli.out, clip, reference),
        Command::Descriptor {
            features,
            rate,
            clip,
            fps,
            dim,
            stride,
            identity_lift,
        } => commands::cmd_descriptor(
            &config,
            &cli.out,
            &DescriptorArgs {
                features: features.as_deref(),
                rate: *rate,
                clip: clip.as_deref(),
                fps: *fps,
                dim: *dim,
                stride: *stride,
                identity_lift: *identity_lift,
            },
        ),
        Command::Align {
            features_a,
            features_b,
            rate,
        } => commands::cmd_align(&config, &cli.out, features_a, features_b, *rate),
        Command::Eval { gt, pred } => commands::cmd_eval(&config, &cli.out, gt, pred),
        Command::Sweep {
            spec,
            betas,
            lambdas,
            iters,
        } => commands::cmd_sweep(
            &config,
            &cli.out,
            spec.as_deref(),
            &SweepGrid {
                betas: betas.clone(),
                lambdas: lambdas.clone(),
                iters: iters.clone(),
            },
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
