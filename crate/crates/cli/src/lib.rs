//! Batch front end for the fracorder toolkit.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fracorder::{DerivativeKind, ErrorClass};

pub mod commands;
pub mod output;
pub mod scenario;
pub mod spectrum;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] fracorder::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// 2 usage, 3 numeric failure, 4 model or domain error, 5 inverse precondition.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Csv(_) => 2,
            CliError::Model(e) => match e.class() {
                ErrorClass::Numeric => 3,
                ErrorClass::Domain => 4,
                ErrorClass::InversePrecondition => 5,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fracorder", version, about = "Fractional-order systems: forward solves and order recovery")]
pub struct Cli {
    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Reserved; nothing in the toolkit is random.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate E_{α,β}(z) at one or more points.
    MlEval(MlEvalArgs),
    /// Tabulate the Fourier solution on the grid at the scenario times.
    Forward(ForwardArgs),
    /// Produce an observation record at (t0, xi0).
    Observe(ScenarioArgs),
    /// Recover the vector order from an observation record.
    Invert(InvertArgs),
    /// Report the spectral and sign conditions and monotonicity certificates at xi0.
    Check(ScenarioArgs),
    /// Write a ready-made scenario.
    Example(ExampleArgs),
}

#[derive(Debug, Args)]
pub struct MlEvalArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub beta: f64,
    /// Arguments such as -1, 2.5, 1+2i, -3.5e-1-0.5i.
    #[arg(long, required = true, num_args = 1.., allow_hyphen_values = true)]
    pub z: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the derivative kind of the scenario.
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<DerivativeKind>,
}

#[derive(Debug, Args)]
pub struct ForwardArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    /// Overrides the scenario times (comma separated).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub times: Option<Vec<f64>>,
    /// Also reconstruct u(t, x) at the scenario x points and write it here.
    #[arg(long)]
    pub spatial_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InvertArgs {
    #[command(flatten)]
    pub common: ScenarioArgs,
    /// Observation record written by `observe`.
    #[arg(long, required_unless_present = "suggest_t0")]
    pub observation: Option<PathBuf>,
    /// Only search for a certified observation time at xi0.
    #[arg(long)]
    pub suggest_t0: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ExampleName {
    CoupledPair,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(long, value_enum, default_value = "coupled-pair")]
    pub name: ExampleName,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    pub kind: Option<DerivativeKind>,
}

fn parse_kind(s: &str) -> Result<DerivativeKind, String> {
    s.parse().map_err(|e: fracorder::Error| e.to_string())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    if let Some(seed) = cli.seed {
        log::debug!("--seed {seed} ignored");
    }
    match cli.command {
        Command::MlEval(a) => commands::ml_eval(&a),
        Command::Forward(a) => commands::forward(&a),
        Command::Observe(a) => commands::observe(&a),
        Command::Invert(a) => commands::invert(&a),
        Command::Check(a) => commands::check(&a),
        Command::Example(a) => commands::example(&a),
    }
}
