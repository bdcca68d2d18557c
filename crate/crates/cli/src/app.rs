//! Argument parsing and subcommand dispatch.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format, SweepConfig};
use crate::experiment::{self, write_experiment, write_semiwave, write_trajectory, SemiWaveSummary};
use crate::failure::{CliResult, Failure};
use crate::io;
use crate::reproduce::{reproduce, Recipe};
use crate::sweep::{run_sweep, write_sweep};

const DEFAULT_OUT: &str = "coopfront-out";

#[derive(Debug, Parser)]
#[command(name = "coopfront", version, about = "Spreading fronts of a cooperative free-boundary system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Experiment (or sweep) configuration, JSON.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory; overrides `outputs.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Encoding of tabular outputs; overrides `outputs.format`.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check parameters and numerical settings.
    Validate,
    /// Positive kinetic equilibrium.
    Equilibrium,
    /// Critical speed, tail rate, principal eigenvalue and critical length.
    Spectral {
        /// Speed for the tail rate; defaults to the Stefan-consistent speed.
        #[arg(long)]
        speed: Option<f64>,
    },
    /// Semi-wave profile at one speed.
    Semiwave {
        /// Defaults to the Stefan-consistent speed.
        #[arg(long)]
        speed: Option<f64>,
    },
    /// Stefan-consistent semi-wave speed.
    Speed,
    /// Full free-boundary run with analysis.
    Simulate,
    /// Cartesian parameter sweep (the config is a sweep config).
    Sweep,
    /// Re-check a headline behaviour on the reference instance.
    Reproduce {
        #[arg(value_enum)]
        recipe: Recipe,
    },
}

/// Result of a successful command: stdout payload and process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: Value,
    pub exit_code: u8,
}

impl Outcome {
    fn ok(output: Value) -> Self {
        Self { output, exit_code: 0 }
    }
}

fn config_path(cli: &Cli) -> CliResult<&Path> {
    cli.config
        .as_deref()
        .ok_or_else(|| Failure::parse("--config PATH is required for this command"))
}

fn to_value<S: serde::Serialize>(value: &S) -> Value {
    serde_json::to_value(value).expect("serialisable value")
}

/// Output directory chosen for a command, if any.
pub fn out_dir(cli: &Cli, cfg_dir: Option<&Path>, required: bool) -> Option<PathBuf> {
    cli.out
        .clone()
        .or_else(|| cfg_dir.map(Path::to_path_buf))
        .or_else(|| required.then(|| PathBuf::from(DEFAULT_OUT)))
}

fn write_if<S: serde::Serialize>(dir: Option<&Path>, name: &str, value: &S) -> CliResult<()> {
    if let Some(dir) = dir {
        io::ensure_dir(dir)?;
        io::write_json(dir, name, value)?;
    }
    Ok(())
}

/// Runs one command. Failures carry their exit code; the caller reports
/// them and, when `error_dir` is set, writes `error.json` there.
pub fn execute(cli: &Cli) -> Result<Outcome, (Failure, Option<PathBuf>)> {
    let mut error_dir: Option<PathBuf> = cli.out.clone();
    let result = dispatch(cli, &mut error_dir);
    result.map_err(|f| (f, error_dir))
}

fn dispatch(cli: &Cli, error_dir: &mut Option<PathBuf>) -> CliResult<Outcome> {
    if let Command::Reproduce { recipe } = cli.command {
        let report = reproduce(recipe);
        write_if(cli.out.as_deref(), "report.json", &report)?;
        let code = if report.pass { 0 } else { 1 };
        return Ok(Outcome { output: to_value(&report), exit_code: code });
    }
    if let Command::Sweep = cli.command {
        let sweep = SweepConfig::load(config_path(cli)?)?;
        let dir = out_dir(cli, sweep.base.outputs.dir.as_deref(), true).expect("default directory");
        *error_dir = Some(dir.clone());
        let format = cli.format.unwrap_or(sweep.base.outputs.format);
        let rows = run_sweep(&sweep)?;
        write_sweep(&dir, &sweep, &rows, format)?;
        return Ok(Outcome::ok(to_value(&rows)));
    }

    let cfg = ExperimentConfig::load(config_path(cli)?)?;
    let required = matches!(cli.command, Command::Simulate);
    let dir = out_dir(cli, cfg.outputs.dir.as_deref(), required);
    *error_dir = dir.clone();
    let format = cli.format.unwrap_or(cfg.outputs.format);
    let dir = dir.as_deref();

    match cli.command {
        Command::Validate => {
            let report = coopfront::validate(&cfg.params, cfg.require_h);
            let value = json!({
                "valid": report.is_valid(),
                "violations": report.violations,
                "warnings": report.warnings,
            });
            cfg.check()?;
            write_if(dir, "validation.json", &value)?;
            Ok(Outcome::ok(value))
        }
        Command::Equilibrium => {
            let eq = experiment::equilibrium(&cfg)?;
            write_if(dir, "equilibrium.json", &eq)?;
            Ok(Outcome::ok(to_value(&eq)))
        }
        Command::Spectral { speed } => {
            let s = match speed {
                Some(s) => s,
                None => experiment::speed(&cfg)?.s_mu_rho,
            };
            let summary = experiment::spectral(&cfg, s)?;
            write_if(dir, "spectral.json", &summary)?;
            Ok(Outcome::ok(to_value(&summary)))
        }
        Command::Semiwave { speed } => {
            let s = match speed {
                Some(s) => s,
                None => experiment::speed(&cfg)?.s_mu_rho,
            };
            let sol = experiment::semiwave(&cfg, s)?;
            if let Some(dir) = dir {
                io::ensure_dir(dir)?;
                write_semiwave(dir, &sol, format)?;
            }
            Ok(Outcome::ok(to_value(&SemiWaveSummary::of(&sol))))
        }
        Command::Speed => {
            let res = experiment::speed(&cfg)?;
            write_if(dir, "speed.json", &res)?;
            Ok(Outcome::ok(to_value(&res)))
        }
        Command::Simulate => {
            let dir = dir.expect("simulate always has a directory");
            match experiment::simulate(&cfg) {
                Ok(exp) => {
                    write_experiment(dir, &cfg, &exp, format)?;
                    Ok(Outcome::ok(to_value(&exp.summary())))
                }
                Err((failure, partial)) => {
                    if let Some(p) = partial {
                        io::ensure_dir(dir)?;
                        io::write_json(dir, "manifest.json", &cfg)?;
                        write_trajectory(dir, &p.trajectory, format)?;
                    }
                    Err(failure)
                }
            }
        }
        Command::Sweep | Command::Reproduce { .. } => unreachable!("handled above"),
    }
}

/// Reports a failure on stderr and in `<dir>/error.json`; returns the exit code.
pub fn report_failure(failure: &Failure, dir: Option<&Path>) -> u8 {
    let payload = failure.to_json();
    eprintln!("{payload}");
    if let Some(dir) = dir {
        if io::ensure_dir(dir).is_ok() {
            let _ = io::write_json(dir, "error.json", &payload);
        }
    }
    failure.exit_code()
}
