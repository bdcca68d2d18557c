//! Bundled recipes that re-check the headline behaviours on the reference
//! instance and report measured values against fixed tolerances.

use coopfront::analysis::{fit_speed_and_drift, fit_speed_and_drift_between, front_speed_series, VerdictKind};
use coopfront::fbsolver::Sample;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiment::{simulate, Experiment};
use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Recipe {
    Dichotomy,
    Speed,
    SharpProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance, pass: measured <= tolerance }
    }

    /// Passes when `measured < bound`.
    fn below(name: &str, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, tolerance: bound, pass: measured < bound }
    }

    fn holds(name: &str, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self { name: name.into(), measured: v, tolerance: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub recipe: Recipe,
    pub pass: bool,
    pub checks: Vec<Check>,
    /// Cause of a numerical failure that prevented some checks.
    pub failure: Option<Failure>,
}

impl Report {
    fn new(recipe: Recipe, checks: Vec<Check>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self { recipe, pass, checks, failure: None }
    }

    fn failed(recipe: Recipe, failure: Failure) -> Self {
        Self { recipe, pass: false, checks: Vec::new(), failure: Some(failure) }
    }
}

pub fn spreading_config() -> ExperimentConfig {
    ExperimentConfig::reference(3.0, 0.5)
}

pub fn vanishing_config() -> ExperimentConfig {
    ExperimentConfig::reference(0.5, 0.01)
}

fn run_reference(cfg: &ExperimentConfig) -> Result<Experiment, Failure> {
    simulate(cfg).map_err(|(f, _)| f)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Speed checks on a spreading run against the semi-wave speed `golden`.
pub fn speed_checks(exp: &Experiment, golden: f64, window_fraction: f64) -> Result<Vec<Check>, Failure> {
    let fit = fit_speed_and_drift(&exp.trajectory, window_fraction)?;
    let series = front_speed_series(&exp.trajectory, window_fraction);
    Ok(vec![
        Check::at_most("relative speed error, right front", relative(fit.s_hat, golden), 0.02),
        Check::at_most("relative speed error, left front", relative(fit.s_hat_left, golden), 0.02),
        Check::at_most(
            "relative error of the trailing mean of h'",
            relative(series.trailing_mean_right, golden),
            0.02,
        ),
        Check::at_most(
            "relative error of the trailing mean of -g'",
            relative(series.trailing_mean_left, golden),
            0.02,
        ),
    ])
}

fn sample_at(samples: &[Sample], t: f64) -> Option<&Sample> {
    samples.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
}

/// Drift-intercept stability and profile-error checks on a spreading run.
pub fn sharp_profile_checks(exp: &Experiment) -> Result<Vec<Check>, Failure> {
    let traj = &exp.trajectory;
    let t_end = traj.last().t;
    let early = fit_speed_and_drift_between(traj, 0.5 * t_end, 0.75 * t_end)?;
    let late = fit_speed_and_drift_between(traj, 0.75 * t_end, t_end)?;
    let u_star = exp.semiwave.u_star;
    let last = traj.last();
    let quarter = sample_at(&traj.samples, 0.25 * t_end).expect("nonempty trajectory");
    let err = |s: &Sample, right: bool| {
        let e = if right { s.profile_err_right } else { s.profile_err_left };
        e.unwrap_or(f64::INFINITY)
    };
    Ok(vec![
        Check::at_most(
            "right drift intercept change between trailing windows",
            (early.h_star_hat - late.h_star_hat).abs(),
            0.05,
        ),
        Check::at_most(
            "left drift intercept change between trailing windows",
            (early.g_star_hat - late.g_star_hat).abs(),
            0.05,
        ),
        Check::at_most("right profile error at t_end", err(last, true), 0.05 * u_star),
        Check::at_most("left profile error at t_end", err(last, false), 0.05 * u_star),
        Check::below("right profile error at t_end vs t_end/4", err(last, true), err(quarter, true)),
        Check::below("left profile error at t_end vs t_end/4", err(last, false), err(quarter, false)),
    ])
}

/// Verdict checks on the spreading and vanishing reference runs.
pub fn dichotomy_checks(spreading: &Experiment, vanishing: &Experiment) -> Vec<Check> {
    let l_star = vanishing.spectral.l_star;
    let ev = vanishing.verdict.evidence;
    vec![
        Check::holds("h0 = 3 run classified Spreading", spreading.verdict.kind == VerdictKind::Spreading),
        Check::holds("h0 = 0.5 run classified Vanishing", vanishing.verdict.kind == VerdictKind::Vanishing),
        Check::below("vanishing run final max density", ev.final_max_density, 1e-4),
        Check::at_most("vanishing run final span", ev.final_span, 2.0 * l_star + 0.2),
    ]
}

pub fn reproduce(recipe: Recipe) -> Report {
    let outcome = match recipe {
        Recipe::Speed => run_reference(&spreading_config())
            .and_then(|exp| speed_checks(&exp, exp.speed.s_mu_rho, spreading_config().numerics.window_fraction)),
        Recipe::SharpProfile => run_reference(&spreading_config()).and_then(|exp| sharp_profile_checks(&exp)),
        Recipe::Dichotomy => run_reference(&spreading_config()).and_then(|s| {
            let v = run_reference(&vanishing_config())?;
            Ok(dichotomy_checks(&s, &v))
        }),
    };
    match outcome {
        Ok(checks) => Report::new(recipe, checks),
        Err(f) => Report::failed(recipe, f),
    }
}
