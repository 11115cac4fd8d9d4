//! `activehne` command-line interface.
//!
//! Exit codes: 0 success, 1 output failure, 2 configuration error, 3 data
//! error, 4 numeric divergence.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

pub use config::{load_config, ExperimentConfig, Override};
pub use error::CliError;
pub use manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "activehne", version, about = "Active learning for heterogeneous network embedding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the active-learning loop (repeated `runs` times).
    Run(ExperimentArgs),
    /// Run the full method, the five single-criterion variants and the random baseline.
    Ablate(ExperimentArgs),
    /// Repeat the experiment for several convolution orders K.
    Ksweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Comma-separated orders, e.g. `1,2,3`; defaults to `ksweep.orders`.
        #[arg(long, value_delimiter = ',')]
        k: Option<Vec<usize>>,
    },
    /// Write a planted-partition heterogeneous graph as TSV files.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// JSON config, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    /// Override a config key, e.g. `--set loop.batch_size=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Master seed (same as `--set loop.seed=N`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Strategy (same as `--set loop.strategy=NAME`).
    #[arg(long)]
    pub strategy: Option<String>,
    /// Parent directory of the timestamped run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
    /// Threads for repeated runs.
    #[arg(long)]
    pub parallel_runs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    pub types: usize,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 200)]
    pub nodes_per_class: usize,
    #[arg(long, default_value_t = 0.05)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.005)]
    pub p_out: f64,
    /// Half-width of the uniform feature noise.
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for nodes.tsv, edges.tsv, features.tsv and params.json.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn dispatch(command: &Command) -> Result<PathBuf, CliError> {
    match command {
        Command::Run(a) => commands::cmd_run(a),
        Command::Ablate(a) => commands::cmd_ablate(a),
        Command::Ksweep { exp, k } => commands::cmd_ksweep(exp, k.as_deref()),
        Command::Synth(a) => commands::cmd_synth(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the output directory.
pub fn invoke<I, T>(args: I) -> Result<PathBuf, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    dispatch(&cli.command)
}

/// Entry point for the binary: prints the output directory on success and
/// the error on failure, and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli.command) {
        Ok(dir) => {
            println!("{}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
