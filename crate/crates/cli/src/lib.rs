//! Command-line harness: `simulate`, `compare`, `solve` and `concordance`.
//! Each writes CSV/JSON artifacts and a `manifest.json` into its output
//! directory.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::{Args, Parser, Subcommand};

use config::{CommandKind, RunArgs, RunConfig, TwoEconomyArgs};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "wealthx",
    version,
    about = "Closed-economy wealth exchange simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run trajectories and write trajectory, histogram and summary files.
    Simulate(RunArgs),
    /// Matched uniform vs Gaussian ensembles; writes comparison.json.
    Compare(RunArgs),
    /// Closed-form deterministic two-economy solution.
    Solve(SolveArgs),
    /// Stochastic ensemble mean vs the deterministic solution.
    Concordance(ConcordanceArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub two: TwoEconomyArgs,
    /// Last transaction index to tabulate (same as --transactions).
    #[arg(long, value_name = "N")]
    pub m_max: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ConcordanceArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub two: TwoEconomyArgs,
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Simulate(_) => CommandKind::Simulate,
            Command::Compare(_) => CommandKind::Compare,
            Command::Solve(_) => CommandKind::Solve,
            Command::Concordance(_) => CommandKind::Concordance,
        }
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        let kind = self.kind();
        match self {
            Command::Simulate(run) | Command::Compare(run) => run.resolve(kind, None),
            Command::Solve(args) => {
                let mut run = args.run.clone();
                if let Some(m) = args.m_max {
                    run.transactions = Some(m);
                }
                run.resolve(kind, Some(&args.two))
            }
            Command::Concordance(args) => args.run.resolve(kind, Some(&args.two)),
        }
    }
}

/// Executes a resolved configuration.
pub fn execute(kind: CommandKind, config: &RunConfig) -> CliResult<commands::Artifacts> {
    match kind {
        CommandKind::Simulate => commands::simulate(config),
        CommandKind::Compare => commands::compare(config),
        CommandKind::Solve => commands::solve(config),
        CommandKind::Concordance => commands::concordance_cmd(config),
    }
}

pub fn run(cli: &Cli) -> CliResult<commands::Artifacts> {
    let config = cli.command.resolve()?;
    execute(cli.command.kind(), &config)
}
