//! Experiment runner for the rumor-propagation toolkit.
//!
//! ```text
//! rumorwave <asymptotics|trajectory|simulate|converge|sweep|tables>
//!           --config <path> [--out <dir>] [--seed-base N]
//!           [--deterministic] [--check-integrator]
//! ```
//!
//! Every command writes `<command>.csv` (fixed, documented header) and
//! `<command>_summary.json` into the output directory. Exit codes: 0 on
//! success, 1 on configuration errors, 2 when the asymptotic analysis finds
//! no outbreak, 3 when a reference-table cell exceeds its tolerance.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config file, or I/O trouble — exit 1.
    Config(String),
    /// The spreader curve never becomes positive — exit 2.
    NoOutbreak,
    /// A reference-table cell exceeded its tolerance — exit 3.
    TableMismatch { failing: usize },
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::NoOutbreak => {
                write!(f, "no outbreak: the spreader proportion never becomes positive")
            }
            CliError::TableMismatch { failing } => {
                write!(f, "{failing} reference cell(s) exceeded tolerance")
            }
        }
    }
}

impl From<rumorwave::limits::LimitsError> for CliError {
    fn from(e: rumorwave::limits::LimitsError) -> Self {
        match e {
            rumorwave::limits::LimitsError::NoOutbreak => CliError::NoOutbreak,
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<rumorwave::mtra::MtraError> for CliError {
    fn from(e: rumorwave::mtra::MtraError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::NoOutbreak => 2,
            CliError::TableMismatch { .. } => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "rumorwave",
    version,
    about = "Rumor-propagation experiments: asymptotics, trajectories, simulation, convergence, sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory for CSV and JSON files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Replace the seed stream base from the config.
    #[arg(long, global = true)]
    seed_base: Option<u64>,

    /// Omit timestamps so reruns are byte-identical.
    #[arg(long, global = true)]
    deterministic: bool,

    /// In `trajectory`, also integrate the limit system and report the
    /// largest deviation from the closed forms.
    #[arg(long, global = true)]
    check_integrator: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Absorption point, final proportions, peaks, and wave count.
    Asymptotics {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed-form curves on a ζ-grid.
    Trajectory {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate finite-population outbreaks per seed.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare scaled accelerated paths against the limit curves over
    /// growing populations.
    Converge {
        #[arg(long)]
        config: PathBuf,
    },
    /// Asymptotics over a one-parameter family grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Recompute the published reference tables and report every diff.
    Tables {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create output directory {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }

    let ctx = commands::Ctx {
        out: cli.out.clone(),
        seed_base: cli.seed_base,
        deterministic: cli.deterministic,
        check_integrator: cli.check_integrator,
    };

    let result = match &cli.command {
        Command::Asymptotics { config } => commands::asymptotics::run(&ctx, config),
        Command::Trajectory { config } => commands::trajectory::run(&ctx, config),
        Command::Simulate { config } => commands::simulate::run(&ctx, config),
        Command::Converge { config } => commands::converge::run(&ctx, config),
        Command::Sweep { config } => commands::sweep::run(&ctx, config),
        Command::Tables { config } => commands::tables::run(&ctx, config.as_deref()),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
