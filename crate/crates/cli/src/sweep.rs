//! Cartesian parameter sweeps over experiment configurations.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{ExperimentConfig, Format, SweepConfig};
use crate::experiment::{simulate, ExperimentSummary};
use crate::failure::{CliResult, Failure};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    /// `(path, value)` for every axis, in axis order.
    pub deltas: Vec<(String, Value)>,
    pub summary: Option<ExperimentSummary>,
    pub error: Option<Failure>,
}

/// The grid points as lists of `(path, value)`, last axis fastest.
pub fn grid(axes: &[crate::config::Axis]) -> Vec<Vec<(String, Value)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.path.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

fn apply(base: &Value, deltas: &[(String, Value)]) -> CliResult<ExperimentConfig> {
    let mut doc = base.clone();
    for (path, value) in deltas {
        let slot = doc
            .pointer_mut(path)
            .ok_or_else(|| Failure::validation(vec![format!("sweep axis {path} does not exist")]))?;
        *slot = value.clone();
    }
    serde_json::from_value(doc).map_err(|e| Failure::parse(format!("sweep point: {e}")))
}

/// Checks the axes against the base configuration and the point cap.
pub fn check(sweep: &SweepConfig) -> CliResult<Value> {
    let base = serde_json::to_value(&sweep.base).expect("config serialises");
    let mut problems = Vec::new();
    for axis in &sweep.axes {
        if base.pointer(&axis.path).is_none() {
            problems.push(format!("sweep axis {} does not exist", axis.path));
        }
        if axis.values.is_empty() {
            problems.push(format!("sweep axis {} has no values", axis.path));
        }
    }
    if sweep.max_parallel == 0 {
        problems.push("max_parallel must be positive (got 0)".into());
    }
    let size: usize = sweep.axes.iter().map(|a| a.values.len()).product();
    if size > sweep.max_points {
        problems.push(format!("sweep has {size} points, above max_points = {}", sweep.max_points));
    }
    if problems.is_empty() {
        Ok(base)
    } else {
        Err(Failure::validation(problems))
    }
}

/// Runs every grid point; failures are recorded in their rows.
pub fn run_sweep(sweep: &SweepConfig) -> CliResult<Vec<SweepRow>> {
    let base = check(sweep)?;
    let points = grid(&sweep.axes);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep.max_parallel)
        .build()
        .map_err(|e| Failure::io(e.into()))?;
    let mut rows: Vec<SweepRow> = pool.install(|| {
        points
            .into_par_iter()
            .enumerate()
            .map(|(index, deltas)| {
                let outcome = apply(&base, &deltas).and_then(|cfg| simulate(&cfg).map_err(|(f, _)| f));
                let (summary, error) = match outcome {
                    Ok(exp) => (Some(exp.summary()), None),
                    Err(f) => (None, Some(f)),
                };
                SweepRow { index, deltas, summary, error }
            })
            .collect()
    });
    rows.sort_by_key(|r| r.index);
    Ok(rows)
}

fn number(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep(dir: &Path, sweep: &SweepConfig, rows: &[SweepRow], format: Format) -> CliResult<()> {
    io::ensure_dir(dir)?;
    io::write_json(dir, "sweep_manifest.json", sweep)?;
    match format {
        Format::Json => {
            io::write_json(dir, "sweep.json", &rows)?;
        }
        Format::Csv => {
            let mut header = vec!["index".to_string()];
            header.extend(sweep.axes.iter().map(|a| a.path.clone()));
            header.extend(
                ["s_star", "l_star", "s_mu_rho", "verdict", "s_hat", "h_star_hat", "error"]
                    .map(String::from),
            );
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut rec = vec![r.index.to_string()];
                    rec.extend(r.deltas.iter().map(|(_, v)| v.to_string()));
                    let s = r.summary.as_ref();
                    rec.push(number(s.map(|s| s.s_star)));
                    rec.push(number(s.map(|s| s.l_star)));
                    rec.push(number(s.map(|s| s.s_mu_rho)));
                    rec.push(s.map(|s| format!("{:?}", s.verdict)).unwrap_or_default());
                    rec.push(number(s.and_then(|s| s.s_hat)));
                    rec.push(number(s.and_then(|s| s.h_star_hat)));
                    rec.push(r.error.as_ref().map(|e| e.message.clone()).unwrap_or_default());
                    rec
                })
                .collect();
            io::write_table(dir, "sweep.csv", &header, &table)?;
        }
    }
    Ok(())
}
