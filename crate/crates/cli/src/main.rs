//! `dnp`: field sweeps, rates, trajectories and ensemble runs from a TOML config.

mod commands;
mod config;
mod error;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::load_config;
use crate::error::CliError;
use crate::table::write_output;

#[derive(Parser)]
#[command(
    name = "dnp",
    version,
    about = "Nuclear polarization by an optically pumped NV center"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flip rates W₊, W₋ of one nucleus per field point.
    Rates(Common),
    /// Steady polarization versus field (and angle in map mode).
    Sweep(Common),
    /// Polarization trajectory at one field.
    Evolve(Common),
    /// Mean polarization of a nuclear ensemble versus field.
    Multispin(Common),
    /// Samples lattice nuclei and writes them as JSON.
    Lattice(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides a config key, e.g. `--set model.pump_rate_mhz=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Rates(c)
    | Command::Sweep(c)
    | Command::Evolve(c)
    | Command::Multispin(c)
    | Command::Lattice(c)) = &cli.command;
    let cfg = load_config(&c.config, &c.set)?;
    let out = c.out.clone().or_else(|| cfg.output.path.clone());
    let format = cfg.output.format;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = c.jobs {
        if j == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;

    pool.install(|| match &cli.command {
        Command::Rates(_) => {
            write_output(out.as_deref(), &commands::cmd_rates(&cfg)?.render(format)?)
        }
        Command::Sweep(_) => {
            write_output(out.as_deref(), &commands::cmd_sweep(&cfg)?.render(format)?)
        }
        Command::Evolve(_) => {
            write_output(out.as_deref(), &commands::cmd_evolve(&cfg)?.render(format)?)
        }
        Command::Multispin(_) => {
            let res = commands::cmd_multispin(&cfg)?;
            let report_to = match &res.report {
                Some(_) => Some(commands::report_path(&cfg, out.as_deref())?),
                None => None,
            };
            write_output(out.as_deref(), &res.table.render(format)?)?;
            if let (Some(json), Some(path)) = (res.report, report_to) {
                write_output(Some(&path), json.as_bytes())?;
            }
            Ok(())
        }
        Command::Lattice(_) => {
            write_output(out.as_deref(), commands::cmd_lattice(&cfg)?.as_bytes())
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dnp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
