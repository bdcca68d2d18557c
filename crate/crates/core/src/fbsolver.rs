//! Time integration of the free-boundary system on a fixed reference grid.
//!
//! The moving habitat `(g, h)` is mapped onto `xi in [-1, 1]` by
//! `x = c + xi w` with centre `c = (g + h)/2` and half-width `w = (h - g)/2`.
//! In these coordinates
//!
//! ```text
//! U_t = d1 U_xixi / w^2 + (c' + xi w') / w * U_xi - a U + b V - F(U)
//! ```
//!
//! (and likewise for `V`), with zero Dirichlet data at `xi = ±1`. Each step
//! advances the fronts by forward Euler from the current Stefan speeds, then
//! takes a diffusion-implicit step with explicit mesh advection and reaction.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::profile_error;
use crate::equilibrium::solve_equilibrium;
use crate::error::{Error, Result};
use crate::linalg::solve_tridiagonal;
use crate::model::{InitialData, ModelParams};
use crate::real::{max_value, Real};
use crate::semiwave::SemiWaveSolution;

pub const MIN_CELLS: usize = 100;
/// Relative headroom of the discrete density bound over its a-priori value.
pub const BOUND_SLACK: f64 = 0.05;
/// Below this density the fronts are frozen.
pub const FREEZE_DENSITY: f64 = 1e-14;
const CFL: f64 = 0.4;

/// Transformed state at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FrontState<T = f64> {
    pub t: T,
    pub g: T,
    pub h: T,
    pub xi: Vec<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
    /// Discrete a-priori bound `max(|u0|, |v0|, u*, v*) (1 + slack)`.
    pub density_bound: T,
}

impl<T: Real> FrontState<T> {
    pub fn cells(&self) -> usize {
        self.xi.len() - 1
    }

    pub fn half_width(&self) -> T {
        (self.h - self.g) * T::lit(0.5)
    }

    pub fn center(&self) -> T {
        (self.h + self.g) * T::lit(0.5)
    }

    /// Node positions in physical coordinates.
    pub fn physical_nodes(&self) -> Vec<T> {
        let (c, w) = (self.center(), self.half_width());
        let m = self.cells();
        self.xi
            .iter()
            .enumerate()
            .map(|(i, &xi)| {
                if i == 0 {
                    self.g
                } else if i == m {
                    self.h
                } else {
                    c + xi * w
                }
            })
            .collect()
    }

    pub fn max_u(&self) -> T {
        max_value(&self.u)
    }

    pub fn max_v(&self) -> T {
        max_value(&self.v)
    }

    /// Dirichlet ends, nonnegativity (to `-1e-12`), the density bound and
    /// ordered fronts.
    pub fn check(&self) -> Result<()> {
        let m = self.cells();
        if self.u[0] != T::zero() || self.u[m] != T::zero() || self.v[0] != T::zero() || self.v[m] != T::zero() {
            return Err(Error::Assertion("densities must vanish at both fronts".into()));
        }
        let floor = -T::lit(1e-12);
        if self.u.iter().chain(&self.v).any(|&x| !(x >= floor)) {
            return Err(Error::Assertion("negative density".into()));
        }
        if self.max_u().max(self.max_v()) > self.density_bound {
            return Err(Error::BlowUp(format!(
                "density exceeds the bound {}",
                self.density_bound
            )));
        }
        if !(self.h > self.g) {
            return Err(Error::Geometry("fronts crossed".into()));
        }
        Ok(())
    }
}

fn reference_grid<T: Real>(m: usize) -> Vec<T> {
    let mf = T::from_count(m);
    (0..=m)
        .map(|i| T::lit(2.0 * i as f64 - m as f64) / mf)
        .collect()
}

/// Samples the initial data onto `M + 1` reference nodes over `[-h0, h0]`.
pub fn init_state<T: Real>(
    params: &ModelParams<T>,
    initial: &InitialData<T>,
    m: usize,
) -> Result<FrontState<T>> {
    initial.check()?;
    if m < MIN_CELLS {
        return Err(Error::Domain(format!("front solver needs M >= {MIN_CELLS}")));
    }
    let eq = solve_equilibrium(params)?;
    let xi = reference_grid::<T>(m);
    let mut u = vec![T::zero(); m + 1];
    let mut v = vec![T::zero(); m + 1];
    for i in 1..m {
        let (ui, vi) = initial.sample(xi[i] * initial.h0);
        u[i] = ui;
        v[i] = vi;
    }
    let (nu, nv) = initial.sup_norms();
    let bound = nu.max(nv).max(eq.u_star).max(eq.v_star) * (T::one() + T::lit(BOUND_SLACK));
    let state = FrontState {
        t: T::zero(),
        g: -initial.h0,
        h: initial.h0,
        xi,
        u,
        v,
        density_bound: bound,
    };
    state.check()?;
    Ok(state)
}

/// Front velocity `-mu (v_x + rho u_x)` from the one-sided gradients.
#[inline]
pub fn stefan_law<T: Real>(mu: T, rho: T, u_x: T, v_x: T) -> T {
    -mu * (v_x + rho * u_x)
}

/// Third-order one-sided slope `(-11 w0 + 18 w1 - 9 w2 + 2 w3) / (6 h)`.
#[inline]
pub fn edge_slope<T: Real>(w: [T; 4], spacing: T) -> T {
    (-T::lit(11.0) * w[0] + T::lit(18.0) * w[1] - T::lit(9.0) * w[2] + T::lit(2.0) * w[3])
        / (T::lit(6.0) * spacing)
}

/// `(g', h')` from four-point one-sided gradients at both fronts.
pub fn stefan_speeds<T: Real>(state: &FrontState<T>, params: &ModelParams<T>) -> Result<(T, T)> {
    if state.max_u().max(state.max_v()) < T::lit(FREEZE_DENSITY) {
        return Ok((T::zero(), T::zero()));
    }
    let m = state.cells();
    let dxi = T::lit(2.0) / T::from_count(m);
    let w = state.half_width();
    // the right-front slope is the left-front formula on the mirrored samples
    let right = |vals: &[T]| -edge_slope([vals[m], vals[m - 1], vals[m - 2], vals[m - 3]], dxi) / w;
    let left = |vals: &[T]| edge_slope([vals[0], vals[1], vals[2], vals[3]], dxi) / w;
    let hprime = stefan_law(params.mu, params.rho, right(&state.u), right(&state.v));
    let gprime = stefan_law(params.mu, params.rho, left(&state.u), left(&state.v));
    if hprime < T::zero() || gprime > T::zero() || !hprime.is_finite() || !gprime.is_finite() {
        return Err(Error::Assertion(format!(
            "front speeds have the wrong sign (g' = {gprime}, h' = {hprime})"
        )));
    }
    Ok((gprime, hprime))
}

/// Largest admissible step: 0.4 times the smaller of the mesh-advection
/// CFL limit and the inverse kinetic Lipschitz bound.
pub fn dt_max<T: Real>(state: &FrontState<T>, params: &ModelParams<T>) -> Result<T> {
    let speeds = stefan_speeds(state, params)?;
    Ok(dt_limit(state, params, speeds))
}

fn dt_limit<T: Real>(state: &FrontState<T>, params: &ModelParams<T>, (gp, hp): (T, T)) -> T {
    let m = state.cells();
    let dxi = T::lit(2.0) / T::from_count(m);
    let w = state.half_width();
    let cp = (gp + hp) * T::lit(0.5);
    let wp = (hp - gp) * T::lit(0.5);
    // |c' + xi w'| is largest at an end of the reference interval
    let vel = (cp + wp).abs().max((cp - wp).abs()) / w;
    let lipschitz = (params.a + params.f_spec.derivative(state.max_u()) + params.b)
        .max(params.d + params.g_spec.derivative(state.max_v()) + params.c);
    let mut limit = T::one() / lipschitz;
    if vel > T::zero() {
        limit = limit.min(dxi / vel);
    }
    T::lit(CFL) * limit
}

/// One step of size `dt` (which must not exceed [`dt_max`]).
pub fn step<T: Real>(state: &FrontState<T>, params: &ModelParams<T>, dt: T) -> Result<FrontState<T>> {
    let speeds = stefan_speeds(state, params)?;
    let limit = dt_limit(state, params, speeds);
    if !(dt > T::zero()) || dt > limit {
        return Err(Error::Domain(format!("dt = {dt} outside (0, {limit}]")));
    }
    advance(state, params, dt, speeds)
}

fn advance<T: Real>(
    state: &FrontState<T>,
    params: &ModelParams<T>,
    dt: T,
    (gp, hp): (T, T),
) -> Result<FrontState<T>> {
    let m = state.cells();
    let half = T::lit(0.5);
    let dxi = T::lit(2.0) / T::from_count(m);
    let w = state.half_width();
    let cp = (gp + hp) * half;
    let wp = (hp - gp) * half;

    let g = state.g + dt * gp;
    let h = state.h + dt * hp;
    if !(h > g) {
        return Err(Error::Geometry(format!("fronts crossed at t = {}", state.t + dt)));
    }
    let w_new = (h - g) * half;

    let n = m - 1;
    let mut rhs_u = vec![T::zero(); n];
    let mut rhs_v = vec![T::zero(); n];
    let inv_2dxi = T::one() / (T::lit(2.0) * dxi);
    for i in 1..m {
        let vel = (cp + state.xi[i] * wp) / w;
        let (fu, fv) = params.reaction(state.u[i], state.v[i]);
        rhs_u[i - 1] = state.u[i]
            + dt * (vel * (state.u[i + 1] - state.u[i - 1]) * inv_2dxi + fu);
        rhs_v[i - 1] = state.v[i]
            + dt * (vel * (state.v[i + 1] - state.v[i - 1]) * inv_2dxi + fv);
    }
    let implicit_solve = |diff: T, rhs: &mut [T]| -> Result<()> {
        let r = dt * diff / (w_new * w_new * dxi * dxi);
        let off = vec![-r; n];
        let diag = vec![T::one() + T::lit(2.0) * r; n];
        solve_tridiagonal(&off, &diag, &off, rhs)
    };
    implicit_solve(params.d1, &mut rhs_u)?;
    implicit_solve(params.d2, &mut rhs_v)?;

    let mut u = Vec::with_capacity(m + 1);
    let mut v = Vec::with_capacity(m + 1);
    u.push(T::zero());
    v.push(T::zero());
    u.extend_from_slice(&rhs_u);
    v.extend_from_slice(&rhs_v);
    u.push(T::zero());
    v.push(T::zero());

    let bound = state.density_bound;
    if u.iter().chain(&v).any(|x| !(x.abs() <= bound)) {
        return Err(Error::BlowUp(format!(
            "density left [0, {bound}] at t = {}",
            state.t + dt
        )));
    }
    Ok(FrontState {
        t: state.t + dt,
        g,
        h,
        xi: state.xi.clone(),
        u,
        v,
        density_bound: bound,
    })
}

/// Numerical settings of a free-boundary run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RunSettings<T = f64> {
    /// Number of cells `M` on the reference interval.
    pub m: usize,
    /// Requested step; clamped to [`dt_max`].
    pub dt: T,
    pub t_end: T,
    pub sample_every: T,
    #[serde(default)]
    pub snapshot_times: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Sample<T = f64> {
    pub t: T,
    pub g: T,
    pub h: T,
    pub gprime: T,
    pub hprime: T,
    pub max_u: T,
    pub max_v: T,
    /// Sup-norm distance to the reflected semi-wave near each front, when a
    /// reference semi-wave was supplied.
    pub profile_err_left: Option<T>,
    pub profile_err_right: Option<T>,
}

/// Densities in physical coordinates at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Snapshot<T = f64> {
    pub t: T,
    pub x: Vec<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Trajectory<T = f64> {
    pub samples: Vec<Sample<T>>,
    pub params: ModelParams<T>,
    pub settings: RunSettings<T>,
    pub snapshots: Vec<Snapshot<T>>,
    pub final_state: FrontState<T>,
    pub steps: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Sample<T> {
        self.samples.last().expect("trajectory holds the initial sample")
    }

    /// Monotone fronts across samples, to `1e-12`.
    pub fn check_fronts(&self) -> Result<()> {
        let tol = T::lit(1e-12);
        for pair in self.samples.windows(2) {
            if pair[1].h - pair[0].h < -tol || pair[0].g - pair[1].g < -tol {
                return Err(Error::Assertion(format!(
                    "fronts moved inwards between t = {} and t = {}",
                    pair[0].t, pair[1].t
                )));
            }
        }
        Ok(())
    }
}

/// A run that stopped early; `partial` holds everything recorded so far.
#[derive(Debug, Clone)]
pub struct RunFailure<T: Real = f64> {
    pub partial: Box<Trajectory<T>>,
    pub error: Error,
}

impl<T: Real> fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "run stopped at t = {}: {}",
            self.partial.final_state.t, self.error
        )
    }
}

impl<T: Real> std::error::Error for RunFailure<T> {}

fn record<T: Real>(
    state: &FrontState<T>,
    params: &ModelParams<T>,
    reference: Option<&SemiWaveSolution<T>>,
) -> Result<Sample<T>> {
    let (gprime, hprime) = stefan_speeds(state, params)?;
    let (right, left) = match reference {
        Some(sol) => {
            let (r, l) = profile_error(state, sol)?;
            (Some(r), Some(l))
        }
        None => (None, None),
    };
    Ok(Sample {
        t: state.t,
        g: state.g,
        h: state.h,
        gprime,
        hprime,
        max_u: state.max_u(),
        max_v: state.max_v(),
        profile_err_left: left,
        profile_err_right: right,
    })
}

fn snapshot<T: Real>(state: &FrontState<T>) -> Snapshot<T> {
    Snapshot {
        t: state.t,
        x: state.physical_nodes(),
        u: state.u.clone(),
        v: state.v.clone(),
    }
}

/// Integrates to `t_end`, recording a sample every `sample_every` time
/// units (and at `t_end`) plus snapshots at the requested times.
pub fn run<T: Real>(
    params: &ModelParams<T>,
    initial: &InitialData<T>,
    settings: &RunSettings<T>,
    reference: Option<&SemiWaveSolution<T>>,
) -> Result<Trajectory<T>, Box<RunFailure<T>>> {
    let init = init_state(params, initial, settings.m);
    let state = match init {
        Ok(s) => s,
        Err(error) => {
            return Err(Box::new(RunFailure {
                partial: Box::new(empty_trajectory(params, initial, settings)),
                error,
            }))
        }
    };
    let mut traj = Trajectory {
        samples: Vec::new(),
        params: *params,
        settings: settings.clone(),
        snapshots: Vec::new(),
        final_state: state,
        steps: 0,
    };
    match integrate(params, settings, reference, &mut traj) {
        Ok(()) => Ok(traj),
        Err(error) => Err(Box::new(RunFailure {
            partial: Box::new(traj),
            error,
        })),
    }
}

fn empty_trajectory<T: Real>(
    params: &ModelParams<T>,
    initial: &InitialData<T>,
    settings: &RunSettings<T>,
) -> Trajectory<T> {
    Trajectory {
        samples: Vec::new(),
        params: *params,
        settings: settings.clone(),
        snapshots: Vec::new(),
        final_state: FrontState {
            t: T::zero(),
            g: -initial.h0,
            h: initial.h0,
            xi: Vec::new(),
            u: Vec::new(),
            v: Vec::new(),
            density_bound: T::zero(),
        },
        steps: 0,
    }
}

/// Sample and snapshot instants, merged and sorted.
fn event_times<T: Real>(settings: &RunSettings<T>) -> Vec<(T, bool, bool)> {
    let mut events: Vec<(T, bool, bool)> = Vec::new();
    let mut k = 1;
    loop {
        let t = T::from_count(k) * settings.sample_every;
        if t >= settings.t_end {
            break;
        }
        events.push((t, true, false));
        k += 1;
    }
    events.push((settings.t_end, true, false));
    for &t in &settings.snapshot_times {
        if t > T::zero() && t <= settings.t_end {
            events.push((t, false, true));
        }
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut merged: Vec<(T, bool, bool)> = Vec::with_capacity(events.len());
    for e in events {
        match merged.last_mut() {
            Some(last) if last.0 == e.0 => {
                last.1 |= e.1;
                last.2 |= e.2;
            }
            _ => merged.push(e),
        }
    }
    merged
}

fn integrate<T: Real>(
    params: &ModelParams<T>,
    settings: &RunSettings<T>,
    reference: Option<&SemiWaveSolution<T>>,
    traj: &mut Trajectory<T>,
) -> Result<()> {
    if !(settings.dt > T::zero()) || !(settings.t_end > T::zero()) || !(settings.sample_every > T::zero()) {
        return Err(Error::Domain("dt, t_end and sample_every must be positive".into()));
    }
    traj.samples.push(record(&traj.final_state, params, reference)?);
    if settings.snapshot_times.iter().any(|&t| t == T::zero()) {
        traj.snapshots.push(snapshot(&traj.final_state));
    }
    let landing = T::lit(1e-9);
    for (target, is_sample, is_snapshot) in event_times(settings) {
        while traj.final_state.t < target {
            let state = &traj.final_state;
            let speeds = stefan_speeds(state, params)?;
            let limit = dt_limit(state, params, speeds);
            let dt = settings.dt.min(limit);
            let remaining = target - state.t;
            let (dt, lands) = if remaining <= dt * (T::one() + landing) {
                (remaining, true)
            } else {
                (dt, false)
            };
            let mut next = advance(state, params, dt, speeds)?;
            if lands {
                next.t = target;
            }
            traj.final_state = next;
            traj.steps += 1;
        }
        if is_sample {
            traj.samples.push(record(&traj.final_state, params, reference)?);
        }
        if is_snapshot {
            traj.snapshots.push(snapshot(&traj.final_state));
        }
    }
    traj.check_fronts()
}
