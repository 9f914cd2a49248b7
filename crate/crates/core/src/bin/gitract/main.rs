//! `gitract`: dataset splitting, descriptor extraction, classifier training,
//! late fusion and evaluation for 16-class endoscopy image sets.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod args;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use args::{BenchArgs, ConfigFile, EvaluateArgs, ExtractArgs, FuseArgs, PredictArgs, SplitArgs, TrainArgs};

#[derive(Debug, Parser)]
#[command(name = "gitract", version, about = "Global-feature and late-fusion image classification")]
struct Cli {
    /// TOML file with top-level `seed`/`threads` and per-subcommand tables;
    /// command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stratified train/validation split of a class-per-directory dataset.
    Split(SplitArgs),
    /// Compute the 702-value descriptor vector for every image in a split.
    Extract(ExtractArgs),
    /// Train SimpleLogistic or LMT on the training rows, report on validation.
    Train(TrainArgs),
    /// Fuse two branch probability files by averaging or an MLP head.
    Fuse(FuseArgs),
    /// Apply a trained model to a feature file.
    Predict(PredictArgs),
    /// Score predictions against split labels.
    Evaluate(EvaluateArgs),
    /// Time each descriptor over a set of images.
    Bench(BenchArgs),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Runtime(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn run(cli: Cli) -> CliResult<()> {
    let mut file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Split(a) => commands::split(a.resolve(&mut file)),
        Command::Extract(a) => commands::extract(a.resolve(&mut file)),
        Command::Train(a) => commands::train(a.resolve(&mut file)),
        Command::Fuse(a) => commands::fuse(a.resolve(&mut file)),
        Command::Predict(a) => commands::predict(a.resolve(&mut file)),
        Command::Evaluate(a) => commands::evaluate(a.resolve(&mut file)),
        Command::Bench(a) => commands::bench(a.resolve(&mut file)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
