//! Single-configuration pipelines behind the subcommands.

use std::path::Path;

use coopfront::analysis::{classify, fit_speed_and_drift, SpeedFit, Thresholds, Verdict, VerdictKind};
use coopfront::equilibrium::{solve_equilibrium, Equilibrium};
use coopfront::fbsolver::{run, Trajectory};
use coopfront::semiwave::{solve_semiwave, solve_speed, SemiWaveSolution, SpeedResult};
use coopfront::spectral::{spectral_summary, SpectralSummary};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Format};
use crate::failure::{CliResult, Failure};
use crate::io;

pub fn equilibrium(cfg: &ExperimentConfig) -> CliResult<Equilibrium> {
    cfg.check()?;
    Ok(solve_equilibrium(&cfg.params)?)
}

/// Spectral quantities at the semi-wave speed and the initial half-width.
pub fn spectral(cfg: &ExperimentConfig, speed: f64) -> CliResult<SpectralSummary> {
    let eq = equilibrium(cfg)?;
    Ok(spectral_summary(&cfg.params, &eq, speed, cfg.initial.h0, cfg.numerics.spectral_tol)?)
}

pub fn speed(cfg: &ExperimentConfig) -> CliResult<SpeedResult> {
    cfg.check()?;
    Ok(solve_speed(&cfg.params, cfg.numerics.speed_tol, &cfg.numerics.semiwave)?)
}

pub fn semiwave(cfg: &ExperimentConfig, s: f64) -> CliResult<SemiWaveSolution> {
    cfg.check()?;
    Ok(solve_semiwave(&cfg.params, s, &cfg.numerics.semiwave)?)
}

#[derive(Debug, Clone, Serialize)]
struct ProfileRow {
    xi: f64,
    phi: f64,
    psi: f64,
}

pub fn write_semiwave(dir: &Path, sol: &SemiWaveSolution, format: Format) -> CliResult<()> {
    let rows: Vec<ProfileRow> = sol
        .xi
        .iter()
        .zip(sol.phi.iter().zip(&sol.psi))
        .map(|(&xi, (&phi, &psi))| ProfileRow { xi, phi, psi })
        .collect();
    io::write_rows(dir, "semiwave", &rows, format)?;
    io::write_json(dir, "semiwave_summary.json", &SemiWaveSummary::of(sol))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiWaveSummary {
    pub s: f64,
    pub dphi0: f64,
    pub dpsi0: f64,
    pub fitted_tail: Option<f64>,
    pub residual_max: f64,
    pub method: coopfront::semiwave::SolverMethod,
    pub iterations: usize,
}

impl SemiWaveSummary {
    pub fn of(sol: &SemiWaveSolution) -> Self {
        Self {
            s: sol.s,
            dphi0: sol.dphi0,
            dpsi0: sol.dpsi0,
            fitted_tail: sol.fitted_tail,
            residual_max: sol.residual_max,
            method: sol.method,
            iterations: sol.iterations,
        }
    }
}

/// Headline numbers of one simulation; also the row payload of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub s_star: f64,
    pub l_star: f64,
    pub s_mu_rho: f64,
    pub verdict: VerdictKind,
    pub s_hat: Option<f64>,
    pub h_star_hat: Option<f64>,
}

/// Everything computed by a full simulation.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub spectral: SpectralSummary,
    pub speed: SpeedResult,
    pub semiwave: SemiWaveSolution,
    pub trajectory: Trajectory,
    pub verdict: Verdict,
    pub fit: Option<SpeedFit>,
}

impl Experiment {
    pub fn summary(&self) -> ExperimentSummary {
        ExperimentSummary {
            s_star: self.spectral.s_star,
            l_star: self.spectral.l_star,
            s_mu_rho: self.speed.s_mu_rho,
            verdict: self.verdict.kind,
            s_hat: self.fit.map(|f| f.s_hat),
            h_star_hat: self.fit.map(|f| f.h_star_hat),
        }
    }
}

/// A simulation that failed after some output was produced.
pub struct PartialRun {
    pub trajectory: Trajectory,
    pub failure: Failure,
}

/// Spectral summary, Stefan-consistent speed, reference semi-wave, the
/// free-boundary run and its analysis.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Experiment, (Failure, Option<Box<PartialRun>>)> {
    cfg.check().map_err(|f| (f, None))?;
    let plain = |f: Failure| (f, None);
    let speed = speed(cfg).map_err(plain)?;
    let spectral = spectral(cfg, speed.s_mu_rho).map_err(plain)?;
    let semiwave = semiwave(cfg, speed.s_mu_rho).map_err(plain)?;
    let initial = cfg.initial.build().map_err(|e| plain(e.into()))?;
    let trajectory = match run(&cfg.params, &initial, &cfg.numerics.run_settings(), Some(&semiwave)) {
        Ok(t) => t,
        Err(failure) => {
            let f = Failure::from(failure.error.clone());
            let partial = PartialRun { trajectory: *failure.partial, failure: f.clone() };
            return Err((f, Some(Box::new(partial))));
        }
    };
    let verdict = classify(&trajectory, &Thresholds::new(spectral.l_star));
    let fit = if verdict.kind == VerdictKind::Spreading {
        Some(fit_speed_and_drift(&trajectory, cfg.numerics.window_fraction).map_err(|e| plain(e.into()))?)
    } else {
        None
    };
    Ok(Experiment { spectral, speed, semiwave, trajectory, verdict, fit })
}

#[derive(Debug, Clone, Serialize)]
struct SnapshotRow {
    t: f64,
    x: f64,
    u: f64,
    v: f64,
}

pub fn write_trajectory(dir: &Path, traj: &Trajectory, format: Format) -> CliResult<()> {
    io::write_rows(dir, "trajectory", &traj.samples, format)?;
    for (k, snap) in traj.snapshots.iter().enumerate() {
        let rows: Vec<SnapshotRow> = snap
            .x
            .iter()
            .zip(snap.u.iter().zip(&snap.v))
            .map(|(&x, (&u, &v))| SnapshotRow { t: snap.t, x, u, v })
            .collect();
        io::write_rows(dir, &format!("snapshot_{k:03}"), &rows, format)?;
    }
    Ok(())
}

/// Writes the full artifact set of a simulation into `dir`.
pub fn write_experiment(dir: &Path, cfg: &ExperimentConfig, exp: &Experiment, format: Format) -> CliResult<()> {
    io::ensure_dir(dir)?;
    io::write_json(dir, "manifest.json", cfg)?;
    write_trajectory(dir, &exp.trajectory, format)?;
    io::write_json(dir, "spectral.json", &exp.spectral)?;
    io::write_json(dir, "speed.json", &exp.speed)?;
    write_semiwave(dir, &exp.semiwave, format)?;
    io::write_json(dir, "verdict.json", &exp.verdict)?;
    io::write_json(dir, "fit.json", &exp.fit)?;
    io::write_json(dir, "summary.json", &exp.summary())?;
    Ok(())
}
