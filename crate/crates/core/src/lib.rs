//! Numerical laboratory for a two-species cooperative reaction-diffusion
//! system whose habitat `(g(t), h(t))` expands by Stefan front laws.
//!
//! Modules, bottom up:
//!
//! * [`model`]: coefficients, power-law losses, initial data, validation.
//! * [`equilibrium`]: positive kinetic equilibrium and homogeneous ODE runs.
//! * [`spectral`]: dispersion quartic, critical speed, tail rate, principal
//!   eigenvalue and critical half-length.
//! * [`semiwave`]: semi-wave profiles and the Stefan-consistent speed.
//! * [`fbsolver`]: front-fixing time integration of the free-boundary system.
//! * [`analysis`]: dichotomy verdicts, speed and drift fits, profile errors.
//!
//! All solvers are generic over the scalar type ([`Real`]); the aliases
//! below fix it to `f64` or `f32`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod equilibrium;
pub mod error;
pub mod fbsolver;
pub mod linalg;
pub mod model;
pub mod real;
pub mod semiwave;
pub mod spectral;

pub use error::{Error, Result};
pub use real::Real;

pub use analysis::{
    classify, fit_speed_and_drift, fit_speed_and_drift_between, front_speed_series,
    profile_error, SpeedFit, Thresholds, Verdict, VerdictKind,
};
pub use equilibrium::{integrate_homogeneous, solve_equilibrium, Equilibrium, OdeTrajectory};
pub use fbsolver::{init_state, run, step, stefan_speeds, FrontState, RunSettings, Trajectory};
pub use model::{
    eval_loss, make_initial_preset, validate, InitialData, ModelParams, NonlinearitySpec,
    ValidationReport,
};
pub use semiwave::{
    fit_tail, front_derivatives, solve_semiwave, solve_semiwave_newton, solve_semiwave_relax,
    solve_speed, speed_residual, SemiWaveSettings, SemiWaveSolution, SpeedResult,
};
pub use spectral::{
    critical_length, critical_speed, eval_quartic, principal_eigenvalue, quartic_roots,
    tail_rate, QuarticRoots, SpectralSummary,
};

pub type ModelParamsF64 = ModelParams<f64>;
pub type ModelParamsF32 = ModelParams<f32>;
pub type InitialDataF64 = InitialData<f64>;
pub type InitialDataF32 = InitialData<f32>;
pub type SemiWaveF64 = SemiWaveSolution<f64>;
pub type SemiWaveF32 = SemiWaveSolution<f32>;
pub type FrontStateF64 = FrontState<f64>;
pub type FrontStateF32 = FrontState<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
