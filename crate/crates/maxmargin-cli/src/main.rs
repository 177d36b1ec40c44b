//! Command-line entry point. See the library crate for what each
//! subcommand writes; this file only parses arguments, dispatches, and
//! maps errors to exit codes (2 config, 3 oracle, 4 i/o).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use maxmargin_cli::config::ExperimentConfig;
use maxmargin_cli::{generate_dataset, oracle_report, run_comparison, run_experiment, CliError};

/// Prints one line to stdout, tolerating a closed pipe (e.g. `| head`).
fn emit(line: &str) -> Result<(), CliError> {
    match writeln!(std::io::stdout(), "{line}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(CliError::Io(e)),
    }
}

#[derive(Parser)]
#[command(
    name = "maxmargin",
    about = "Iteratively regularized max-margin solvers and baselines",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured algorithm; write per-algorithm trace CSVs and summary.json.
    Run {
        /// Experiment description (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's output_dir).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run every configured algorithm; write one wide comparison.csv aligned on t.
    Compare {
        /// Experiment description (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's output_dir).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve the configured instance to optimality and print the solution as JSON.
    Oracle {
        /// Experiment description (TOML).
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate the configured dataset and write it as headerless CSV.
    Gen {
        /// Experiment description (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Train CSV path; a held-out split goes to `<stem>_test.<ext>`.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    Ok(ExperimentConfig::from_path(path)?)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, output } => {
            let cfg = load(&config)?;
            let out = run_experiment(&cfg, output.as_deref())?;
            emit(&out.summary_path.display().to_string())?;
        }
        Command::Compare { config, output } => {
            let cfg = load(&config)?;
            let path = run_comparison(&cfg, output.as_deref())?;
            emit(&path.display().to_string())?;
        }
        Command::Oracle { config } => {
            let cfg = load(&config)?;
            let report = oracle_report(&cfg)?;
            let text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
            emit(&text)?;
        }
        Command::Gen { config, out } => {
            let cfg = load(&config)?;
            for path in generate_dataset(&cfg, &out)? {
                emit(&path.display().to_string())?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
