//! `incentive`: expected cost, optimal incentives, phase constants and
//! simulation checks for institutional reward and punishment.

mod commands;
mod error;
mod output;
mod params;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Produced;
use crate::error::{usage, CliError, Result};
use crate::output::{Emitter, Format};
use crate::params::Resolver;

#[derive(Debug, Parser)]
#[command(
    name = "incentive",
    version,
    about = "Cost of institutional incentives in finite populations"
)]
struct Cli {
    /// TOML file of defaults (key = value, keys as long flag names)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for grid sweeps and simulation
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here plus a `.manifest.json` sidecar
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Expected cost of reward and punishment over a theta grid or a beta sweep
    Cost(commands::CostArgs),
    /// Cheapest incentive that reaches a cooperation target
    Optimize(commands::OptimizeArgs),
    /// Critical constants F*, u* and the selection threshold beta*
    Phase(commands::PhaseArgs),
    /// Monte Carlo estimate of visits and cost, compared with exact values
    Simulate(commands::SimulateArgs),
    /// Run the acceptance criteria
    Validate(commands::ValidateArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Cost(_) => "cost",
            Command::Optimize(_) => "optimize",
            Command::Phase(_) => "phase",
            Command::Simulate(_) => "simulate",
            Command::Validate(_) => "validate",
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut res = Resolver::load(cli.config.as_deref())?;
    let threads = res.opt("threads", cli.threads)?;
    let format = res.opt("format", cli.format)?;
    let subcommand = cli.command.name();

    let pool = match threads {
        Some(0) => return Err(usage("--threads must be >= 1")),
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;

    let produced = pool.install(|| -> Result<Option<Produced>> {
        Ok(Some(match cli.command {
            Command::Cost(a) => commands::cost(a, &mut res)?,
            Command::Optimize(a) => commands::optimize(a, &mut res)?,
            Command::Phase(a) => Produced::single(commands::phase(a, &mut res)?),
            Command::Simulate(a) => commands::simulate(a, &mut res)?,
            Command::Validate(a) => {
                let (reports, table) = commands::validate(a, &mut res)?;
                let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
                let failure = (!failed.is_empty())
                    .then(|| CliError::CheckFailed(format!("criteria failed: {failed:?}")));
                if format.is_none() && cli.out.is_none() {
                    // Plain report lines when no machine format was asked for.
                    for r in &reports {
                        println!("{}", r.line());
                    }
                    println!(
                        "{} of {} criteria passed",
                        reports.len() - failed.len(),
                        reports.len()
                    );
                    return match failure {
                        Some(e) => Err(e),
                        None => Ok(None),
                    };
                }
                Produced {
                    failure,
                    ..Produced::table(table)
                }
            }
        }))
    })?;
    let Some(produced) = produced else {
        return Ok(());
    };

    let emitter = Emitter {
        subcommand,
        format: format.unwrap_or(produced.default_format),
        out: cli.out,
    };
    emitter.emit(produced.payload, res.into_parameters())?;
    match produced.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
