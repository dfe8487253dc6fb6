//! `mixbeam` — equal-length spelling correction with mixture beam search.
//!
//! Subcommands: `correct` (decode a text stream), `eval` (score a parallel
//! corpus), `sweep` (grid over alpha/beta/K), `synth` (build a synthetic
//! parallel benchmark), `train-lm` (train and save the n-gram model).
//!
//! Exit codes: 0 success, 1 usage, 2 data, 3 internal.

mod commands;
mod config;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pipeline::{MixtureArgs, ResourceArgs};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        CliError { code: 1, message }
    }
    pub fn data(message: String) -> Self {
        CliError { code: 2, message }
    }
    pub fn internal(message: String) -> Self {
        CliError { code: 3, message }
    }
    pub fn exit_code(&self) -> u8 {
        self.code
    }
}

#[derive(Parser)]
#[command(
    name = "mixbeam",
    version,
    about = "Equal-length spelling correction with mixture beam-search decoding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correct a stream of sentences, one per line
    Correct(CorrectArgs),
    /// Evaluate correction quality on a parallel corpus
    Eval(EvalArgs),
    /// Evaluate a grid of alpha / beta / beam-size configurations
    Sweep(SweepArgs),
    /// Corrupt a clean corpus into a synthetic parallel benchmark
    Synth(SynthArgs),
    /// Train the character n-gram language model and save it
    TrainLm(TrainLmArgs),
}

#[derive(Args)]
pub struct CommonArgs {
    /// Flat key=value configuration file (flags and MIXBEAM_* env win)
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (0 = automatic)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
pub struct CorrectArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    resources: ResourceArgs,
    #[command(flatten)]
    mixture: MixtureArgs,
    /// Trained language model file
    #[arg(long, value_name = "FILE")]
    lm: PathBuf,
    /// Input text, one sentence per line ("-" = stdin)
    #[arg(long, default_value = "-")]
    input: String,
    /// Output stream ("-" = stdout)
    #[arg(long, default_value = "-")]
    output: String,
    /// Write per-step decoder traces (JSON lines) to this file
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    resources: ResourceArgs,
    #[command(flatten)]
    mixture: MixtureArgs,
    /// Trained language model file
    #[arg(long, value_name = "FILE")]
    lm: PathBuf,
    /// Parallel corpus: id TAB source TAB reference
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Also break character metrics down by error type
    #[arg(long)]
    by_type: bool,
    /// Directory for report artifacts (report.txt, report.jsonl)
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    resources: ResourceArgs,
    #[command(flatten)]
    mixture: MixtureArgs,
    /// Trained language model file
    #[arg(long, value_name = "FILE")]
    lm: PathBuf,
    /// Parallel corpus: id TAB source TAB reference
    #[arg(long, value_name = "FILE")]
    corpus: PathBuf,
    /// Comma-separated alpha values
    #[arg(long, value_name = "LIST")]
    alphas: Option<String>,
    /// Comma-separated beta values
    #[arg(long, value_name = "LIST")]
    betas: Option<String>,
    /// Comma-separated beam sizes
    #[arg(long, value_name = "LIST")]
    beam_sizes: Option<String>,
    /// Directory for the grid artifact (grid.tsv, cells.jsonl)
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    resources: ResourceArgs,
    /// Clean corpus, one sentence per line
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Output parallel corpus ("-" = stdout)
    #[arg(long, default_value = "-")]
    output: String,
    /// RNG seed (default 42)
    #[arg(long)]
    seed: Option<u64>,
    /// Per-character corruption probability (default 0.1)
    #[arg(long)]
    error_rate: Option<f64>,
    /// Distortion probabilities for type sampling (see correct --dm-table)
    #[arg(long, value_name = "P1,P2,P3,P4,P5")]
    dm_table: Option<String>,
}

#[derive(Args)]
pub struct TrainLmArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training text, one sentence per line
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Model output file
    #[arg(long, value_name = "FILE")]
    output: PathBuf,
    /// N-gram order (default 3)
    #[arg(long)]
    order: Option<usize>,
    /// Add-k smoothing constant (default 0.1)
    #[arg(long)]
    k: Option<f64>,
    /// Optional multi-character vocabulary tokens, one per line
    #[arg(long, value_name = "FILE")]
    extra_tokens: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    let result = match cli.command {
        Command::Correct(args) => commands::correct::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::TrainLm(args) => commands::train_lm::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mixbeam: error: {}", e.message);
            ExitCode::from(e.exit_code())
        }
    }
}
