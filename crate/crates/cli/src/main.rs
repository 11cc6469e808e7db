//! `viopat`: run the violation-mining pipeline one stage at a time.

mod config;
mod stages;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, PipelineConfig};
use stages::Stage;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("`{}` has not run; run `viopat {}` first", .0.name(), .0.name())]
    Missing(Stage),
    #[error("`{}` output is stale ({reason}); run `viopat {}` again", stage.name(), stage.name())]
    Stale { stage: Stage, reason: String },
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Missing(_) | CliError::Stale { .. } => 2,
            CliError::Other(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "viopat",
    version,
    about = "Mine fix patterns from static-analysis violations"
)]
struct Cli {
    /// Pipeline configuration file.
    #[arg(long, global = true, default_value = "viopat.conf")]
    config: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Read violation records and project histories into a dataset.
    Ingest,
    /// Follow violations across revisions and classify them.
    Track,
    /// Write violation distributions.
    Stats,
    /// Mine common code patterns of fixed violations.
    MineCode,
    /// Mine fix patterns from violation-fixing changes.
    MineFix,
    /// Rank fix patterns for violations that remain unfixed.
    Match,
    /// Generate patches for ranked violations.
    Apply,
    /// Summarize all stages in one document.
    Report,
}

impl From<Command> for Stage {
    fn from(c: Command) -> Stage {
        match c {
            Command::Ingest => Stage::Ingest,
            Command::Track => Stage::Track,
            Command::Stats => Stage::Stats,
            Command::MineCode => Stage::MineCode,
            Command::MineFix => Stage::MineFix,
            Command::Match => Stage::Match,
            Command::Apply => Stage::Apply,
            Command::Report => Stage::Report,
        }
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(anyhow::Error::from)?;
    }
    let config = PipelineConfig::load(&cli.config)?;
    stages::run(cli.command.into(), &config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("viopat: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
