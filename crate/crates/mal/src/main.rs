use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

mod config;
mod rearrange;
mod solve;
mod verify;

#[derive(Parser)]
#[command(name = "mal", version, about = "Kähler potential geodesics and action experiments on the flat torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an ε-geodesic (or its ε → 0 limit) and write the path.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run verification suites and print one JSON record per check.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated suite names; overrides `verification.suites`.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
    },
    /// Decreasing rearrangement of a `value,weight` table.
    Rearrange {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Solver(_) => 2,
            CliError::Config(_) | CliError::Io(_) => 3,
        }
    }

    fn io(what: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", what.display()))
    }
}

impl From<mal_core::Error> for CliError {
    fn from(e: mal_core::Error) -> Self {
        use mal_core::Error::*;
        match e {
            NonConvergence { .. } | PositivityLoss { .. } | StepUnstable { .. } | GenerationFailed { .. } => {
                CliError::Solver(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var("MAL_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("MAL_THREADS: expected a count, got `{text}`")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("MAL_THREADS: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let clock = Instant::now();
    let outcome = init_threads().and_then(|()| match cli.command {
        Command::Solve { config } => solve::run(&config),
        Command::Verify { config, suite } => verify::run(&config, &suite),
        Command::Rearrange { input, out } => rearrange::run(&input, &out).map(|()| true),
    });
    eprintln!("elapsed {:.3}s", clock.elapsed().as_secs_f64());
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("mal: {e}");
            ExitCode::from(e.code())
        }
    }
}
