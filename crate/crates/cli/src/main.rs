//! `rnnhl`: simulate, search equilibria, sweep learning rates and run the
//! verification suites from the command line.
//!
//! Exit codes: 0 success, 1 runtime anomaly, 2 configuration error.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 2.
    Config(String),
    /// The run itself went wrong: exit code 1.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "rnnhl", version, about = "Attractor landscapes of recurrent networks with Hebbian plasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Run configuration (JSON). Defaults apply to anything left out.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Dotted config override, e.g. `--set system.c=-150`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one trajectory and write it as CSV.
    Simulate,
    /// Find and classify all equilibria.
    Equilibria,
    /// Sweep a learning rate and write the bifurcation diagram.
    Sweep,
    /// Print the critical learning rate of the symmetric motif.
    CriticalC,
    /// Run acceptance checks.
    Verify {
        /// Suite name; overrides `verify.suite` from the config.
        suite: Option<String>,
        /// Stop at the first failing criterion.
        #[arg(long)]
        fail_fast: bool,
        /// Distorts the sigmoid to check that the harness notices.
        #[arg(long, hide = true, default_value_t = 1.0)]
        sigmoid_gain: f64,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.common;
    match common.jobs {
        Some(0) => return Err(CliError::Config("--jobs must be >= 1".into())),
        Some(n) => {
            // Only fails if a pool already exists, which cannot happen here.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        None => {}
    }
    match cli.command {
        Command::Simulate => commands::simulate(&common),
        Command::Equilibria => commands::equilibria(&common),
        Command::Sweep => commands::sweep(&common),
        Command::CriticalC => commands::critical_c(&common),
        Command::Verify {
            suite,
            fail_fast,
            sigmoid_gain,
        } => commands::verify(&common, suite, fail_fast, sigmoid_gain),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
