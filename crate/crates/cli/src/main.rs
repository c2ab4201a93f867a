#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod report;
mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use storage_arb::planning::solve;
use storage_arb::sweep::frequency_sweep;

use config::{fit_csv, Overrides, ParamArgs};
use report::{FitReport, PlanReport};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

/// Storage scheduling and sizing under sinusoidal demand.
#[derive(Parser)]
#[command(name = "storage-arb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit mean and first harmonic to a `timestamp,demand_mw` CSV.
    FitDemand {
        csv: PathBuf,
        #[arg(long, default_value_t = 24.0)]
        period_hours: f64,
    },
    /// Optimal penalty, cycle depth and capacity.
    Plan {
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Planning solution over a log-spaced range of demand frequencies, as CSV.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        omega_lo: Option<f64>,
        #[arg(long)]
        omega_hi: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        /// Output file; stdout if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the closed forms against the numerical oracles.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Oracle time step (hours).
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::FitDemand { csv, period_hours } => {
            let fit = FitReport::from(&fit_csv(&csv, period_hours)?);
            fit.write_table(&mut io::stderr())?;
            print_json(&fit)?;
            Ok(0)
        }
        Command::Plan { params } => {
            let config = params.resolve(Overrides::default())?;
            let demand = config.demand()?;
            let solution = solve(&demand, &config.generation()?, &config.tech()?)?;
            let report = PlanReport::new(&config, &demand, &solution);
            report.write_table(&mut io::stderr())?;
            print_json(&report)?;
            Ok(0)
        }
        Command::Sweep {
            params,
            omega_lo,
            omega_hi,
            points,
            out,
        } => {
            let config = params.resolve(Overrides {
                omega_lo,
                omega_hi,
                points,
                ..Overrides::default()
            })?;
            let rows = frequency_sweep(
                &config.demand()?,
                &config.generation()?,
                &config.tech()?,
                config.omega_lo,
                config.omega_hi,
                config.points,
            )?;
            let target = match (out, &config.output_dir) {
                (Some(path), Some(dir)) if path.is_relative() => Some(dir.join(path)),
                (Some(path), _) => Some(path),
                (None, Some(dir)) => Some(dir.join("sweep.csv")),
                (None, None) => None,
            };
            let sink: Box<dyn Write> = match &target {
                Some(path) => {
                    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                        fs::create_dir_all(parent)
                            .with_context(|| format!("creating {}", parent.display()))?;
                    }
                    Box::new(
                        fs::File::create(path)
                            .with_context(|| format!("creating {}", path.display()))?,
                    )
                }
                None => Box::new(io::stdout().lock()),
            };
            let mut writer = csv::Writer::from_writer(sink);
            for row in &rows {
                writer.serialize(row.record())?;
            }
            writer.flush()?;
            let feasible = rows.iter().filter(|r| r.is_feasible()).count();
            let fractions: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok())
                .map(|s| s.costs.savings_fraction)
                .collect();
            let lo = fractions.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = fractions.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            eprintln!("{feasible}/{} rows feasible", rows.len());
            if !fractions.is_empty() {
                eprintln!("savings fraction {:.4}% .. {:.4}%", 100.0 * lo, 100.0 * hi);
            }
            if let Some(path) = target {
                eprintln!("wrote {}", path.display());
            }
            Ok(0)
        }
        Command::Verify { params, seed, dt } => {
            let config = params.resolve(Overrides::default())?;
            let report = verify::run(&config, seed, dt)?;
            report.write_table(&mut io::stderr())?;
            print_json(&report)?;
            Ok(if report.all_passed {
                0
            } else {
                EXIT_VERIFY_FAILED
            })
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let infeasible = err.chain().any(|cause| {
        matches!(
            cause.downcast_ref::<storage_arb::Error>(),
            Some(storage_arb::Error::InfeasiblePlanning { .. })
        )
    });
    if infeasible {
        EXIT_INFEASIBLE
    } else {
        EXIT_INVALID
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
