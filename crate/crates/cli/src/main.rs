//! `magflow`: simulate and verify magnetic geodesic flows.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::exit::{config_error, CliError};

#[derive(Parser)]
#[command(name = "magflow", version, about = "Magnetic geodesic flows on hypersurfaces of C^n")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one initial state and write the trajectory CSV.
    Simulate {
        config: PathBuf,
        /// Overrides output.path from the config; stdout if neither is set.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the conservation and identity suite; exit 3 on any violation.
    Verify { config: PathBuf },
    /// Action table of the circle orbits sqrt(a_j) e^{i omega t} e_j.
    Orbits {
        /// Ellipsoid semi-axes squared, comma separated, nondecreasing.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        a: Vec<f64>,
        /// 1-based axis; defaults to the last one.
        #[arg(long)]
        axis: Option<usize>,
        /// Comma-separated frequencies; empty or absent gives a header-only table.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        omega: String,
        #[arg(long, default_value_t = magflow::action::CONTACT_SAMPLES)]
        samples: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare the integrator with the closed-form sphere solution at h and h/2.
    Oracle { config: PathBuf },
}

fn parse_list(name: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| config_error(format!("{name}: cannot parse {s:?}")))
        })
        .collect()
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("MAGFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| config_error(format!("MAGFLOW_THREADS: expected a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| config_error(format!("MAGFLOW_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Simulate { config, output } => commands::simulate(&config, output),
        Command::Verify { config } => commands::verify(&config),
        Command::Orbits {
            a,
            axis,
            omega,
            samples,
            output,
        } => commands::orbits(commands::OrbitsArgs {
            a,
            axis,
            omegas: parse_list("omega", &omega)?,
            samples,
            output,
        }),
        Command::Oracle { config } => commands::oracle(&config),
    }
}

fn main() -> ExitCode {
    // Usage errors are configuration errors (exit 1), not clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("magflow: {e}");
            ExitCode::from(e.code)
        }
    }
}
