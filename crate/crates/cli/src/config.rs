//! JSON experiment and sweep configurations.

use std::path::{Path, PathBuf};

use coopfront::model::{make_initial_preset, validate, InitialData, ModelParams};
use coopfront::semiwave::SemiWaveSettings;
use coopfront::fbsolver::RunSettings;
use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Failure};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Cosine bump `amp cos(pi x / (2 h0))` on `[-h0, h0]`, sampled at `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPreset {
    pub h0: f64,
    pub amp_u: f64,
    pub amp_v: f64,
    #[serde(default = "default_preset_nodes")]
    pub n: usize,
}

fn default_preset_nodes() -> usize {
    201
}

impl InitialPreset {
    pub fn build(&self) -> coopfront::Result<InitialData> {
        make_initial_preset(self.h0, self.amp_u, self.amp_v, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    #[serde(rename = "M")]
    pub m: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: f64,
    pub snapshot_times: Vec<f64>,
    pub semiwave: SemiWaveSettings,
    pub speed_tol: f64,
    pub spectral_tol: f64,
    pub window_fraction: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            m: 400,
            dt: 0.01,
            t_end: 60.0,
            sample_every: 0.5,
            snapshot_times: Vec::new(),
            semiwave: SemiWaveSettings::default(),
            speed_tol: 1e-8,
            spectral_tol: 1e-10,
            window_fraction: 0.4,
        }
    }
}

impl Numerics {
    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            m: self.m,
            dt: self.dt,
            t_end: self.t_end,
            sample_every: self.sample_every,
            snapshot_times: self.snapshot_times.clone(),
        }
    }

    /// Field-level problems, empty when the settings are usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut positive = |name: &str, x: f64| {
            if !(x > 0.0 && x.is_finite()) {
                out.push(format!("numerics.{name} must be positive (got {x})"));
            }
        };
        positive("dt", self.dt);
        positive("t_end", self.t_end);
        positive("sample_every", self.sample_every);
        positive("speed_tol", self.speed_tol);
        positive("spectral_tol", self.spectral_tol);
        positive("semiwave.length", self.semiwave.length);
        positive("semiwave.dt", self.semiwave.dt);
        positive("semiwave.t_relax", self.semiwave.t_relax);
        positive("semiwave.relax_tol", self.semiwave.relax_tol);
        positive("semiwave.newton_tol", self.semiwave.newton_tol);
        if self.m < coopfront::fbsolver::MIN_CELLS {
            out.push(format!(
                "numerics.M must be at least {} (got {})",
                coopfront::fbsolver::MIN_CELLS,
                self.m
            ));
        }
        if self.semiwave.nodes < coopfront::semiwave::MIN_NODES {
            out.push(format!(
                "numerics.semiwave.nodes must be at least {} (got {})",
                coopfront::semiwave::MIN_NODES,
                self.semiwave.nodes
            ));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction < 1.0) {
            out.push(format!(
                "numerics.window_fraction must lie in (0, 1) (got {})",
                self.window_fraction
            ));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| t.is_nan() || **t < 0.0) {
            out.push(format!("numerics.snapshot_times must be nonnegative (got {t})"));
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub dir: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ModelParams,
    /// Enforce `bc - ad > 0`, without which no positive equilibrium exists.
    #[serde(rename = "require_H", default = "yes")]
    pub require_h: bool,
    pub initial: InitialPreset,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub outputs: Outputs,
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    /// The reference instance with a cosine start of half-width `h0`.
    pub fn reference(h0: f64, amp: f64) -> Self {
        Self {
            params: ModelParams::reference(),
            require_h: true,
            initial: InitialPreset { h0, amp_u: amp, amp_v: amp, n: default_preset_nodes() },
            numerics: Numerics::default(),
            outputs: Outputs::default(),
        }
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| Failure::parse(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_json(&crate::io::read_text(path)?)
    }

    /// Parameter validation plus numerics and initial-data checks.
    pub fn check(&self) -> CliResult<()> {
        let report = validate(&self.params, self.require_h);
        let mut problems = report.violations.clone();
        problems.extend(self.numerics.problems());
        if let Err(e) = self.initial.build() {
            problems.push(format!("initial: {e}"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Failure::validation(problems))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    /// JSON pointer into the experiment config, e.g. `/params/mu`.
    pub path: String,
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    #[serde(default)]
    pub axes: Vec<Axis>,
    #[serde(default = "default_parallel")]
    pub max_parallel: usize,
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_parallel() -> usize {
    4
}

fn default_max_points() -> usize {
    1024
}

impl SweepConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| Failure::parse(format!("sweep config: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::from_json(&crate::io::read_text(path)?)
    }
}
