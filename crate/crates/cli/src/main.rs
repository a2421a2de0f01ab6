mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::PolicySelector;

#[derive(Debug, Parser)]
#[command(name = "stpa-harness", version, about = "Simulator-backed hazard analysis for drone control policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `base_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `baseline` or `mlp:<weights file>`; overrides `policy`.
    #[arg(long)]
    pub policy: Option<PolicySelector>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write SVG trajectory plots.
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check an STPA model for traceability defects.
    Validate { model: PathBuf },
    /// Show the losses, constraints and UCAs linked to one hazard.
    Trace { model: PathBuf, hazard: String },
    /// Run one episode and write its trajectory log and summary.
    Rollout {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Pilot, allocate and run a perturbation sweep.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Worker threads; defaults to every available core.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Derive the safety envelope from a sweep report.
    Envelope {
        report: PathBuf,
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
        /// Also write the document to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a countermeasure plan from a sweep report.
    Plan {
        report: PathBuf,
        /// STPA model; the built-in drone model when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// Validation or analysis failure.
    Failed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { model } => commands::validate(&model),
        Command::Trace { model, hazard } => commands::trace(&model, &hazard),
        Command::Rollout { run } => commands::rollout(&run),
        Command::Sweep { run, jobs } => commands::sweep(&run, jobs),
        Command::Envelope { report, threshold, out } => commands::envelope(&report, threshold, out.as_deref()),
        Command::Plan { report, model, threshold, out } => {
            commands::plan(&report, model.as_deref(), threshold, out.as_deref())
        }
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
