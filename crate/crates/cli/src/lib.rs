//! The `medsim` command line.
//!
//! Every subcommand prints its fully resolved configuration (as one JSON line
//! on stderr) before doing any work, and every file it writes gets a
//! `<file>.manifest.json` companion recording that configuration together
//! with SHA-256 digests of the inputs and outputs.
//!
//! Exit codes: 0 on success, 1 when arguments or input data fail validation,
//! 2 when a run fails after its inputs were accepted.

use std::ffi::OsString;
use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;
mod manifest;

pub use manifest::{manifest_path, Manifest};

#[derive(Debug, Parser)]
#[command(name = "medsim", version, about = "Medical question similarity toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an intermediate-task dataset (QA, AA, QC) or pass QQ pairs through.
    BuildTasks(BuildTasksArgs),
    /// Fine-tune a pair classifier once, or twice with an intermediate task.
    Train(TrainArgs),
    /// Train every model regime on repeated train/dev splits and compare them.
    Eval(EvalArgs),
    /// Run the consistency vote of several checkpoints on rewrites of one pair.
    Probe(ProbeArgs),
    /// Print token statistics of a pair file or QA corpus.
    Stats(StatsArgs),
    /// Serve FAQ matching over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Question/answer matching (input: QA corpus).
    Qa,
    /// Answer-start/answer-end matching (input: QA corpus).
    Aa,
    /// Same-category question pairs (input: QA corpus).
    Qc,
    /// Labeled question pairs, passed through (input: pair file).
    Qq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    /// Pair JSONL, one labeled pair per line.
    Jsonl,
    /// Pair CSV with a header row.
    Csv,
    /// The released headerless CSV: labeler, question 1, question 2, label.
    Released,
    /// QA corpus JSONL.
    Qa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlternativeArg {
    TwoSided,
    Greater,
    Less,
}

#[derive(Debug, Args, Serialize)]
pub struct BuildTasksArgs {
    #[arg(long, value_enum)]
    pub task: TaskKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// QA corpus JSONL for qa/aa/qc; pair file for qq.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Pair JSONL to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Format of `--in` for `--task qq`.
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: InputFormat,
    #[arg(long, default_value_t = 1)]
    pub negatives: usize,
    /// Answers with fewer sentences are skipped by the AA task (minimum 3).
    #[arg(long, default_value_t = 3)]
    pub min_sentences: usize,
    /// File of ids (one per line) that must not appear in any output pair.
    #[arg(long)]
    pub exclude: Option<PathBuf>,
}

/// Optimisation and encoder settings shared by `train` and `eval`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainOpts {
    /// Final-stage learning rate.
    #[arg(long, default_value_t = 2e-5)]
    pub lr: f64,
    /// Intermediate-stage learning rate; defaults to `--lr`.
    #[arg(long)]
    pub mid_lr: Option<f64>,
    /// Intermediate-stage epochs.
    #[arg(long, default_value_t = 5)]
    pub mid_epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 200)]
    pub max_tokens: usize,
    /// Train the final stage for exactly this many epochs instead of early stopping.
    #[arg(long, conflicts_with = "patience")]
    pub epochs: Option<usize>,
    /// Early-stopping patience on dev accuracy.
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    /// Upper bound on early-stopping epochs.
    #[arg(long, default_value_t = 100)]
    pub max_epochs: usize,
    /// Global gradient-norm clip.
    #[arg(long, default_value_t = 1.0)]
    pub max_grad_norm: f64,
    /// Disable gradient clipping.
    #[arg(long)]
    pub no_clip: bool,
    #[arg(long, default_value_t = 16)]
    pub width: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 32)]
    pub ff_width: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    /// Final-task training pairs.
    #[arg(long = "final")]
    pub final_train: PathBuf,
    /// Intermediate-task pairs; when given, the run is a double fine-tune.
    #[arg(long)]
    pub intermediate: Option<PathBuf>,
    /// Dev pairs for early stopping; carved from `--final` when absent.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Fraction of `--final` held out as dev when `--dev` is absent.
    #[arg(long, default_value_t = 0.1)]
    pub dev_fraction: f64,
    /// Checkpoint to start from instead of a fresh model.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub opts: TrainOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    /// Final-task pairs (JSONL).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Fixed test pairs; when absent a seed-disjoint share of `--dataset` is held out.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub test_seed: u64,
    /// Regimes to compare: `TAG` for a single fine-tune or
    /// `TAG=PATH` for a double fine-tune through the pairs at PATH.
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<String>,
    /// One split per seed.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value_t = 0.2)]
    pub dev_fraction: f64,
    #[arg(long, value_enum, default_value = "two-sided")]
    pub alternative: AlternativeArg,
    /// Report JSON to write; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub opts: TrainOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct ProbeArgs {
    /// Checkpoints to vote (at least four).
    #[arg(long, value_delimiter = ',', required = true)]
    pub models: Vec<PathBuf>,
    /// Question 1, held fixed.
    #[arg(long)]
    pub text_a: String,
    /// Question 2 as originally labeled.
    #[arg(long)]
    pub text_b: String,
    /// Gold label of the original pair (0 or 1).
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub label: u8,
    /// A rewrite of question 2; repeatable.
    #[arg(long = "edit")]
    pub edits: Vec<String>,
    /// File of rewrites, one per line.
    #[arg(long)]
    pub edits_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Probe report JSON to write; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: InputFormat,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long, env = "MEDSIM_HOST", default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, env = "MEDSIM_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Checkpoint path, or `lexical` for the built-in token-overlap scorer.
    #[arg(long, env = "MEDSIM_MODEL")]
    pub model: Option<String>,
    /// FAQ store (JSONL); created on first ingestion.
    #[arg(long, env = "MEDSIM_FAQS", default_value = "faqs.jsonl")]
    pub faqs: PathBuf,
    /// Placeholder replacement map (JSON); the built-in map when absent.
    #[arg(long, env = "MEDSIM_REPLACEMENTS")]
    pub replacement_map: Option<PathBuf>,
    #[arg(long, env = "MEDSIM_FILTER_T", default_value_t = medsim_core::faqmatch::DEFAULT_FILTER_THRESHOLD)]
    pub filter_threshold: f64,
    #[arg(long, env = "MEDSIM_DECISION_T", default_value_t = medsim_core::faqmatch::DEFAULT_DECISION_THRESHOLD)]
    pub decision_threshold: f64,
    #[arg(long, env = "MEDSIM_MAX_RESULTS", default_value_t = 5)]
    pub max_results: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or unusable input data.
    #[error("{0}")]
    Validation(String),
    /// Failure after the inputs were accepted.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
