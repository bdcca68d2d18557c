//! Experiment driver for the `coopfront` solvers: JSON configurations,
//! single runs, parameter sweeps and reproduction recipes.

pub mod app;
pub mod config;
pub mod experiment;
pub mod failure;
pub mod io;
pub mod reproduce;
pub mod sweep;

pub use app::{execute, Cli, Command, Outcome};
pub use config::{ExperimentConfig, Format, SweepConfig};
pub use failure::{Failure, FailureKind};
