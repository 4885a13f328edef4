mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use memd_core::arith::PathKind;
use memd_core::extrema::TiePolicy;
use memd_core::synth::Preset;
use memd_core::{EnvelopeMode, MeanMode};

/// Multivariate empirical mode decomposition.
#[derive(Debug, Parser)]
#[command(name = "memd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one CSV per IMF, the residue and the run config.
    Decompose {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value = "memd-out")]
        out_dir: PathBuf,
    },
    /// Score a preset against its ground truth; exits 1 on threshold failure.
    Validate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Replay the signal sample by sample and compare with the batch result.
    Stream {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Time batch decomposition. Without --path both paths are measured.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 2)]
        warmup: usize,
        /// Exit 1 if the real path falls below this many samples/s/channel.
        #[arg(long)]
        min_rate: Option<f64>,
        #[arg(long)]
        json: bool,
    },
}

fn kebab<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

/// Flags shared by every command. Unset flags fall back to `--config`,
/// then to the built-in defaults.
#[derive(Debug, Args)]
struct RunArgs {
    /// CSV signal file: time column followed by one column per channel.
    #[arg(long, conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// paper-quadtone | alpha-surrogate
    #[arg(long, value_parser = kebab::<Preset>)]
    preset: Option<Preset>,
    /// Run config as JSON, or any CSV artifact written by this tool.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    imfs: Option<usize>,
    #[arg(long)]
    dirs: Option<usize>,
    #[arg(long)]
    siftings: Option<usize>,
    /// fixed | real
    #[arg(long, value_parser = kebab::<PathKind>)]
    path: Option<PathKind>,
    /// cubic | cubic-global | linear
    #[arg(long, value_parser = kebab::<EnvelopeMode>)]
    envelope: Option<EnvelopeMode>,
    /// 2k | k
    #[arg(long, value_parser = kebab::<MeanMode>)]
    mean: Option<MeanMode>,
    /// paper-faithful | strict-first
    #[arg(long, value_parser = kebab::<TiePolicy>)]
    tie: Option<TiePolicy>,
    /// Knots before and after each interval in the windowed spline.
    #[arg(long, num_args = 2, value_names = ["BEFORE", "AFTER"])]
    window: Option<Vec<usize>>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("memd: {e}");
            ExitCode::from(2)
        }
    }
}
