use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use blowup_cli::commands::{self, Output, Status, Vary};
use blowup_cli::Scenario;
use clap::{Args, Parser, Subcommand};

/// Blow-up certificates and simulations for u_t = Δu + f(u) with Dirichlet data.
#[derive(Parser)]
#[command(name = "blowup", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV files (default: output.dir in the scenario).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a scenario key, e.g. --set initial.amplitude=5 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Principal Dirichlet eigenvalue of the grid Laplacian.
    Eig(Common),
    /// Check condition (C) for the scenario's parameters (or search for them).
    CheckCondition(Common),
    /// Evaluate the blow-up certificate J0, M, T*.
    Certify(Common),
    /// Certificate plus time integration to blow-up; writes trajectory.csv.
    Run(Common),
    /// Tabulate (PP), (IBB) and (C) for the scenario's nonlinearity; writes compare.csv.
    Compare(Common),
    /// Run the pipeline over a grid of overrides; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Key and values to vary, e.g. --vary initial.amplitude=5,10,20 (repeatable).
        #[arg(long, value_name = "KEY=V1,V2,...", required = true)]
        vary: Vec<Vary>,
        /// Parallel workers.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn load(common: &Common) -> Result<Scenario> {
    Ok(Scenario::load(&common.config, &common.overrides)?)
}

fn execute(cli: Cli) -> Result<Output> {
    match cli.command {
        Command::Eig(c) => commands::eig(&load(&c)?),
        Command::CheckCondition(c) => commands::check_condition(&load(&c)?),
        Command::Certify(c) => commands::certify(&load(&c)?),
        Command::Run(c) => {
            let scn = load(&c)?;
            commands::run(&scn, &commands::out_dir(c.out.as_deref(), &scn))
        }
        Command::Compare(c) => {
            let scn = load(&c)?;
            commands::compare(&scn, &commands::out_dir(c.out.as_deref(), &scn))
        }
        Command::Sweep { common, vary, workers } => {
            let text = std::fs::read_to_string(&common.config)
                .with_context(|| format!("cannot read {}", common.config.display()))?;
            let base = Scenario::from_toml(&text, &common.overrides)?;
            let out = commands::out_dir(common.out.as_deref(), &base);
            commands::sweep(&text, &common.overrides, &vary, workers, &out)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(output) => {
            print!("{}", output.report);
            if output.status == Status::Failed {
                eprintln!("error: outcome inconsistent with the certificate");
            }
            ExitCode::from(output.status.code())
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::Failed.code())
        }
    }
}
