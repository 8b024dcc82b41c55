//! `pbnbp` command-line tool: enumerate checks, train, prune, quantize and
//! evaluate decoders.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "pbnbp", version, about = "Pruned neural BP / offset min-sum decoders for short block codes")]
struct Cli {
    /// Worker threads for training and simulation (results do not depend on it).
    #[arg(long, global = true, env = "PBNBP_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a parity-check matrix in alist format.
    Checks(ChecksArgs),
    /// Train an unpruned decoder.
    Train(RunArgs),
    /// Prune, retrain and finalize decoders.
    Prune(RunArgs),
    /// Attach quantizers to a float model.
    Quantize(QuantizeArgs),
    /// Monte-Carlo BLER/BER of a model, plain BP or ML.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
pub struct ChecksArgs {
    /// `rm R M`, `ccsds`, `alist PATH` or `descriptor PATH`.
    #[arg(required = true, num_args = 1..=3)]
    pub code: Vec<String>,
    /// Every minimum-weight dual codeword.
    #[arg(long, group = "strategy")]
    pub all_min_weight: bool,
    /// Random dual codewords of weight at most MAX_WEIGHT.
    #[arg(long, num_args = 3, value_names = ["MAX_WEIGHT", "COUNT", "SEED"], group = "strategy")]
    pub sample: Option<Vec<u64>>,
    /// Random subset of the minimum-weight dual codewords.
    #[arg(long, num_args = 2, value_names = ["COUNT", "SEED"], group = "strategy")]
    pub subsample: Option<Vec<u64>>,
    /// Output file (stdout if absent).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Override `train.max_batches`.
    #[arg(long)]
    pub max_batches: Option<u64>,
    /// Override `output_dir`.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("mode").required(true)))]
pub struct QuantizeArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Channel, message and weight bit widths.
    #[arg(long, num_args = 3, value_names = ["Q_CH", "Q_M", "Q_W"], required = true,
          value_parser = clap::value_parser!(u32).range(2..=16))]
    pub bits: Vec<u32>,
    /// Trainable levels, trained jointly with the weights.
    #[arg(long, group = "mode")]
    pub joint: bool,
    /// Fixed uniform levels, weights retrained.
    #[arg(long, group = "mode")]
    pub qat: bool,
    /// Fixed uniform levels, no retraining.
    #[arg(long, group = "mode")]
    pub post_uniform: bool,
    /// Levels fitted to calibration decodes, no retraining.
    #[arg(long, group = "mode")]
    pub post_lloyd: bool,
    /// Message clip for --post-uniform.
    #[arg(long, default_value_t = 8.0)]
    pub clip: f64,
    /// Calibration batches for --post-lloyd.
    #[arg(long, default_value_t = 4)]
    pub calibration_batches: usize,
    /// Training configuration (JSON) for retraining and calibration.
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Override `max_batches` of the training configuration.
    #[arg(long)]
    pub max_batches: Option<u64>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineDecoder {
    Ml,
    Bp,
    MinSum,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true)))]
pub struct EvalArgs {
    #[arg(long, group = "source")]
    pub model: Option<PathBuf>,
    #[arg(long, group = "source")]
    pub decoder: Option<BaselineDecoder>,
    /// Code tokens; required for --decoder, checked against the model otherwise.
    #[arg(long, num_args = 1..=3)]
    pub code: Option<Vec<String>>,
    /// Parity-check matrix (alist) for bp/min-sum; the standard one by default.
    #[arg(long)]
    pub checks: Option<PathBuf>,
    /// Use the iteration plan of this model for bp/min-sum.
    #[arg(long, conflicts_with = "checks")]
    pub plan_from: Option<PathBuf>,
    /// Iterations for bp/min-sum.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Eb/N0 points in dB, comma separated.
    #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub snr: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    pub min_errors: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_blocks: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Checks(a) => commands::checks(a),
        Command::Train(a) => commands::train(a),
        Command::Prune(a) => commands::prune(a),
        Command::Quantize(a) => commands::quantize(a),
        Command::Eval(a) => commands::eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
