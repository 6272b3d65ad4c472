mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use deen_core::optim::OptimizerKind;
use deen_core::ModelKind;

use config::GenKind;

/// Exit status plus message for a failed command.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<deen_core::Error> for Failure {
    fn from(e: deen_core::Error) -> Self {
        use deen_core::Error as E;
        let code = match &e {
            E::Config(_) | E::Domain(_) | E::UnsupportedDimension { .. } => 2,
            E::Dimension(_) | E::Format(_) | E::Io(_) | E::Json(_) => 3,
            E::NonFinite { .. } => 4,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "deen", version, about = "Deep energy estimator networks")]
struct Cli {
    /// Directory receiving every output file (created if missing).
    #[arg(long, global = true, default_value = ".")]
    outdir: PathBuf,
    /// Worker threads for batch and grid evaluation.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// JSON config; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset.
    GenData(GenDataArgs),
    /// Choose the Parzen kernel width by held-out likelihood.
    SelectSigma(SelectSigmaArgs),
    /// Train a DEEN, DSM or CD model.
    Train(TrainArgs),
    /// Energy, density and score grids of a 2-d model.
    Grid(GridArgs),
    /// Curl of a 2-d model's score field.
    Curl(CurlArgs),
    /// Single-step denoising of the rows of a CSV file.
    Denoise(DenoiseArgs),
    /// Patch denoising errors: noisy input, median+Gaussian filter, model.
    Eval(EvalArgs),
}

#[derive(Args, Debug)]
struct GenDataArgs {
    #[arg(long, value_enum)]
    kind: Option<GenKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Spiral jitter standard deviation.
    #[arg(long)]
    noise: Option<f64>,
    /// Gaussian dimension.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    mean: Option<f64>,
    #[arg(long)]
    std: Option<f64>,
    /// Texture image side.
    #[arg(long)]
    size: Option<usize>,
    /// Cut zero-mean patches of this side from the texture images.
    #[arg(long)]
    patch: Option<usize>,
    /// Texture images to cut patches from.
    #[arg(long)]
    images: Option<usize>,
    /// Output file name inside --outdir.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
struct SelectSigmaArgs {
    /// Training samples (CSV).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Training samples (IDX images).
    #[arg(long)]
    idx: Option<PathBuf>,
    /// Use only the first N training samples.
    #[arg(long)]
    limit: Option<usize>,
    /// Held-out samples (CSV).
    #[arg(long)]
    valid: Option<PathBuf>,
    /// Held-out samples (IDX images).
    #[arg(long)]
    valid_idx: Option<PathBuf>,
    #[arg(long)]
    valid_limit: Option<usize>,
    /// Fraction of --data held out when no validation file is given.
    #[arg(long)]
    valid_fraction: Option<f64>,
    /// Candidate widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    candidates: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long, value_parser = parse_kind)]
    kind: Option<ModelKind>,
    /// Training samples (CSV).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Training samples (IDX images).
    #[arg(long)]
    idx: Option<PathBuf>,
    #[arg(long)]
    limit: Option<usize>,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Seed of the parameter initialization.
    #[arg(long)]
    net_seed: Option<u64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    noisy_per_point: Option<usize>,
    /// Draw the noisy set once instead of every iteration.
    #[arg(long)]
    fixed_noise: bool,
    #[arg(long, value_parser = parse_optimizer)]
    optimizer: Option<OptimizerKind>,
    /// Seed of the minibatch and noise streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Running-average window of the loss log.
    #[arg(long)]
    window: Option<usize>,
    /// Continue from the checkpoint in this directory.
    #[arg(long)]
    resume: Option<PathBuf>,
    #[arg(long)]
    log_every: Option<usize>,
}

#[derive(Args, Debug)]
struct GridFlags {
    #[arg(long, allow_hyphen_values = true)]
    x_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x_max: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y_max: Option<f64>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    /// Points per axis (sets both --nx and --ny).
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Checkpoint directory.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    grid: GridFlags,
}

#[derive(Args, Debug)]
struct CurlArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    grid: GridFlags,
    /// Compare the interior max |curl| against this value.
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Noisy samples (CSV).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Kernel width used for denoising; defaults to the training width.
    #[arg(long)]
    sigma_prime: Option<f64>,
    #[arg(long)]
    out: Option<String>,
    /// Also write the first N rows as PGM images.
    #[arg(long)]
    pgm: Option<usize>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Clean held-out patches (CSV).
    #[arg(long)]
    clean: Option<PathBuf>,
    #[arg(long)]
    noise_factor: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
    #[arg(long)]
    sigma_prime: Option<f64>,
    #[arg(long)]
    median_window: Option<usize>,
    #[arg(long)]
    gauss_sigma: Option<f64>,
    /// Write clean/noisy/filtered/denoised PGMs of the first N patches.
    #[arg(long)]
    pgm: Option<usize>,
}

fn parse_kind(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: deen_core::Error| e.to_string())
}

fn parse_optimizer(s: &str) -> Result<OptimizerKind, String> {
    match s {
        "adam" => Ok(OptimizerKind::Adam),
        "sgd" => Ok(OptimizerKind::Sgd),
        other => Err(format!("unknown optimizer {other:?} (adam, sgd)")),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.threads == 0 {
        return Err(Failure::usage("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&cli.outdir).map_err(deen_core::Error::from)?;
    let ctx = commands::Context {
        outdir: cli.outdir,
        config: cli.config,
    };
    match cli.command {
        Command::GenData(a) => commands::gen_data(&ctx, a),
        Command::SelectSigma(a) => commands::select_sigma(&ctx, a),
        Command::Train(a) => commands::train(&ctx, a),
        Command::Grid(a) => commands::grid(&ctx, a),
        Command::Curl(a) => commands::curl(&ctx, a),
        Command::Denoise(a) => commands::denoise(&ctx, a),
        Command::Eval(a) => commands::eval(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
