//! Exit time experiments for monotone detection statistics.
//!
//! Subcommands: `run` (one config-driven experiment), `table` (the two
//! reference ARL tables), `qsd` (quasi-stationary grid solves), and
//! `figures` (plot-ready diagnostic CSVs). All data outputs are
//! deterministic in (config, seed), independent of worker count.

mod commands;
mod config;
mod engine;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::table::TableId;
use crate::config::Overrides;

#[derive(Parser)]
#[command(name = "exitlab", version, about = "Exit time experiments for monotone detection statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ExecFlags {
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Replication count override.
    #[arg(long)]
    reps: Option<u64>,
    /// Desk scale: 10000 replications unless --reps is given.
    #[arg(long)]
    desk: bool,
    /// Directory for emitted files.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; defaults to all cores. Never changes results.
    #[arg(long)]
    workers: Option<usize>,
}

impl ExecFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            reps: self.reps,
            desk: self.desk,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file.
    Run {
        /// Flat key=value experiment config.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: ExecFlags,
    },
    /// Reproduce a reference ARL table.
    Table {
        /// Which table: 1 (CUSUM) or 2 (Shiryaev-Roberts).
        #[arg(long, value_parser = TableId::parse)]
        which: TableId,
        #[command(flatten)]
        flags: ExecFlags,
    },
    /// Solve a quasi-stationary distribution on a grid.
    Qsd {
        /// Flat key=value solve config.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: ExecFlags,
    },
    /// Emit QQ and survival CSVs at the standard settings.
    Figures {
        /// Optional config carrying replications and seed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        flags: ExecFlags,
    },
}

fn dispatch(cli: Cli) -> Result<(), error::CliError> {
    match cli.command {
        Command::Run { config, flags } => commands::run::execute(
            &config,
            flags.overrides(),
            &flags.out_dir,
            flags.workers,
        ),
        Command::Table { which, flags } => commands::table::execute(
            which,
            flags.overrides(),
            &flags.out_dir,
            flags.workers,
        ),
        Command::Qsd { config, flags } => commands::qsd::execute(
            &config,
            flags.overrides(),
            &flags.out_dir,
            flags.workers,
        ),
        Command::Figures { config, flags } => commands::figures::execute(
            config.as_deref(),
            flags.overrides(),
            &flags.out_dir,
            flags.workers,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
