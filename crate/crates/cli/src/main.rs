//! `sctl`: separating-set feature selection from the command line.

mod commands;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sctl_core::sctl::SctlError;

/// Exit status for input errors (bad files, flags or configs).
pub const EXIT_INPUT: u8 = 2;
/// Exit status when no separating set exists.
pub const EXIT_ABSTAINED: u8 = 3;
/// Exit status when the exhaustive search is over budget.
pub const EXIT_BUDGET: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "sctl",
    version,
    about = "Causally invariant feature selection for domain adaptation"
)]
pub struct Cli {
    /// Seed override; recorded in manifests.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a scenario: source.csv, target_NN.csv and metadata.
    Generate(GenerateArgs),
    /// Discover the Markov blanket of a target.
    Mb(MbArgs),
    /// Rank feature sets that separate the target from the contexts.
    Select(SelectArgs),
    /// Fit on source data, score on target data.
    Eval(EvalArgs),
    /// Run a benchmark suite.
    Bench(BenchArgs),
    /// Re-run a command from its manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Scenario JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MbArgs {
    /// Data CSV; optional with --graph.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "iamb")]
    pub algo: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Answer independence queries from this graph instead of data.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub max_cond: Option<usize>,
    /// Columns to read as discrete even when numeric.
    #[arg(long, value_delimiter = ',')]
    pub discrete: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub source: PathBuf,
    /// Target-domain rows; pooled with the source when they include the target column.
    #[arg(long = "target-data")]
    pub target_data: Option<PathBuf>,
    #[arg(long)]
    pub target: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub contexts: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value = "iamb")]
    pub algo: String,
    #[arg(long, default_value = "knn5")]
    pub predictor: String,
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Exhaustive search over all non-context variables instead.
    #[arg(long)]
    pub ess: bool,
    #[arg(long, default_value_t = sctl_core::sctl::DEFAULT_ESS_CAP)]
    pub ess_cap: usize,
    #[arg(long)]
    pub max_subset_size: Option<usize>,
    #[arg(long)]
    pub max_cond: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub discrete: Vec<String>,
    /// Write the JSON lines here instead of stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long = "target-data")]
    pub target_data: PathBuf,
    /// Comma-separated; empty for the constant model.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub features: Vec<String>,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "knn5")]
    pub predictor: String,
    /// Row label; defaults to the target file stem.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub discrete: Vec<String>,
    /// Append the row to this CSV (header written when new).
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory for the re-run; defaults to `<original>.replay`.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

/// The run found no separating set.
#[derive(Debug)]
pub struct Abstained(pub String);

impl std::fmt::Display for Abstained {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Abstained {}

/// Replay produced different outputs.
#[derive(Debug)]
pub struct Mismatch(pub String);

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Mismatch {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Abstained>().is_some() {
        return EXIT_ABSTAINED;
    }
    if let Some(SctlError::BudgetExceeded { .. }) = err.downcast_ref::<SctlError>() {
        return EXIT_BUDGET;
    }
    if err.downcast_ref::<Mismatch>().is_some() {
        return 1;
    }
    EXIT_INPUT
}

pub fn run(cli: Cli, argv: Vec<String>) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(a) => commands::generate::run(&a, cli.seed, &argv),
        Command::Mb(a) => commands::mb::run(&a),
        Command::Select(a) => commands::select::run(&a, cli.seed),
        Command::Eval(a) => commands::eval::run(&a),
        Command::Bench(a) => commands::bench::run(&a, cli.seed, &argv),
        Command::Replay(a) => commands::replay::run(&a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_ABSTAINED {
                eprintln!("abstained: {e}");
            } else {
                eprintln!("error: {e:#}");
            }
            ExitCode::from(code)
        }
    }
}
