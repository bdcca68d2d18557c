//! Positive equilibrium of the kinetic system and its ODE trajectories.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, ModelParams};
use crate::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Equilibrium<T = f64> {
    pub u_star: T,
    pub v_star: T,
}

impl<T: Real> Equilibrium<T> {
    /// Residuals of both kinetic equations at `(u*, v*)`.
    pub fn residuals(&self, params: &ModelParams<T>) -> (T, T) {
        params.reaction(self.u_star, self.v_star)
    }
}

/// Sampled solution of the homogeneous system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct OdeTrajectory<T = f64> {
    pub times: Vec<T>,
    pub u: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> OdeTrajectory<T> {
    pub fn endpoint(&self) -> (T, T) {
        let n = self.times.len() - 1;
        (self.u[n], self.v[n])
    }

    /// Linear interpolation in time; clamps outside the sampled range.
    pub fn at(&self, t: T) -> (T, T) {
        let n = self.times.len();
        if t <= self.times[0] {
            return (self.u[0], self.v[0]);
        }
        if t >= self.times[n - 1] {
            return (self.u[n - 1], self.v[n - 1]);
        }
        let k = self.times.partition_point(|&s| s <= t).max(1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        (
            self.u[k - 1] + w * (self.u[k] - self.u[k - 1]),
            self.v[k - 1] + w * (self.v[k] - self.v[k - 1]),
        )
    }
}

const NEWTON_MAX_ITER: usize = 100;
const BLOWUP: f64 = 1e6;

/// Side of the invariant square `[0, K]^2` containing both `(u0, v0)` and
/// the positive equilibrium.
fn invariant_box<T: Real>(params: &ModelParams<T>, u0: T, v0: T) -> T {
    let level = |gain: T, kappa: T, p: T| {
        if gain > T::zero() {
            (gain / kappa).powf(T::one() / (p - T::one()))
        } else {
            T::zero()
        }
    };
    let kf = level(params.b - params.a, params.f_spec.kappa, params.f_spec.p);
    let kg = level(params.c - params.d, params.g_spec.kappa, params.g_spec.p);
    kf.max(kg).max(u0).max(v0).max(T::one())
}

/// Row-sum Lipschitz bound of the kinetic right-hand side on the invariant box.
pub fn lipschitz_bound<T: Real>(params: &ModelParams<T>, u0: T, v0: T) -> T {
    let k = invariant_box(params, u0, v0);
    let row_u = params.a + params.f_spec.derivative(k) + params.b;
    let row_v = params.c + params.d + params.g_spec.derivative(k);
    row_u.max(row_v)
}

/// Largest admissible step for [`integrate_homogeneous`].
pub fn max_stable_dt<T: Real>(params: &ModelParams<T>, u0: T, v0: T) -> T {
    T::lit(0.1) / lipschitz_bound(params, u0, v0)
}

#[inline]
fn rk4_step<T: Real>(params: &ModelParams<T>, u: T, v: T, dt: T) -> (T, T) {
    let half = T::lit(0.5);
    let (k1u, k1v) = params.reaction(u, v);
    let (k2u, k2v) = params.reaction(u + half * dt * k1u, v + half * dt * k1v);
    let (k3u, k3v) = params.reaction(u + half * dt * k2u, v + half * dt * k2v);
    let (k4u, k4v) = params.reaction(u + dt * k3u, v + dt * k3v);
    let two = T::lit(2.0);
    let sixth = dt / T::lit(6.0);
    (
        u + sixth * (k1u + two * k2u + two * k3u + k4u),
        v + sixth * (k1v + two * k2v + two * k3v + k4v),
    )
}

fn check_ode_inputs<T: Real>(params: &ModelParams<T>, u0: T, v0: T, t_end: T, dt: T) -> Result<()> {
    if !(u0 > T::zero()) || !(v0 > T::zero()) {
        return Err(Error::Domain("initial densities must be positive".into()));
    }
    if !(t_end > T::zero()) || !(dt > T::zero()) {
        return Err(Error::Domain("t_end and dt must be positive".into()));
    }
    let limit = max_stable_dt(params, u0, v0);
    if dt > limit {
        return Err(Error::Domain(format!(
            "dt = {dt} exceeds the explicit stability limit {limit}"
        )));
    }
    Ok(())
}

/// Classical fourth-order integration of the kinetic system with a fixed
/// step; the final step is shortened to land on `t_end`.
pub fn integrate_homogeneous<T: Real>(
    params: &ModelParams<T>,
    u0: T,
    v0: T,
    t_end: T,
    dt: T,
) -> Result<OdeTrajectory<T>> {
    check_ode_inputs(params, u0, v0, t_end, dt)?;
    let steps = (t_end / dt).ceil().as_f64() as usize;
    let mut traj = OdeTrajectory {
        times: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        v: Vec::with_capacity(steps + 1),
    };
    traj.times.push(T::zero());
    traj.u.push(u0);
    traj.v.push(v0);
    let (mut u, mut v) = (u0, v0);
    let blowup = T::lit(BLOWUP);
    for k in 1..=steps {
        let t_prev = T::from_count(k - 1) * dt;
        let t_next = if k == steps { t_end } else { T::from_count(k) * dt };
        (u, v) = rk4_step(params, u, v, t_next - t_prev);
        if !(u.abs() <= blowup) || !(v.abs() <= blowup) {
            return Err(Error::Divergence(format!(
                "homogeneous trajectory left the bounded region at t = {t_next}"
            )));
        }
        traj.times.push(t_next);
        traj.u.push(u);
        traj.v.push(v);
    }
    Ok(traj)
}

/// Endpoint of [`integrate_homogeneous`] without storing samples.
pub fn integrate_endpoint<T: Real>(
    params: &ModelParams<T>,
    u0: T,
    v0: T,
    t_end: T,
    dt: T,
) -> Result<(T, T)> {
    check_ode_inputs(params, u0, v0, t_end, dt)?;
    let steps = (t_end / dt).ceil().as_f64() as usize;
    let (mut u, mut v) = (u0, v0);
    for k in 1..=steps {
        let t_prev = T::from_count(k - 1) * dt;
        let t_next = if k == steps { t_end } else { T::from_count(k) * dt };
        (u, v) = rk4_step(params, u, v, t_next - t_prev);
        if !(u.abs() <= T::lit(BLOWUP)) || !(v.abs() <= T::lit(BLOWUP)) {
            return Err(Error::Divergence(format!(
                "homogeneous trajectory left the bounded region at t = {t_next}"
            )));
        }
    }
    Ok((u, v))
}

fn residual_scale<T: Real>(params: &ModelParams<T>, u: T, v: T) -> T {
    let terms = [
        params.a * u,
        params.b * v,
        params.f_spec.value(u),
        params.c * u,
        params.d * v,
        params.g_spec.value(v),
    ];
    terms.iter().fold(T::one(), |m, &x| m.max(x.abs()))
}

/// Residual tolerance at `(u, v)`: `1e-12`, relative to the size of the
/// individual terms once they exceed 1.
fn residual_tol<T: Real>(params: &ModelParams<T>, u: T, v: T) -> T {
    let floor = T::lit(1e-12).max(T::EPS * T::lit(64.0));
    floor * residual_scale(params, u, v)
}

fn damped_newton<T: Real>(params: &ModelParams<T>, guess: (T, T)) -> Result<Equilibrium<T>> {
    let mut x = Vector2::new(guess.0, guess.1);
    let eval = |x: &Vector2<T>| {
        let (r1, r2) = params.reaction(x[0], x[1]);
        Vector2::new(r1, r2)
    };
    // the trivial state also zeroes the residual; only the positive
    // equilibrium has a Jacobian with positive determinant
    let converged = |x: &Vector2<T>, r: &Vector2<T>| {
        let det = (params.a + params.f_spec.derivative(x[0]))
            * (params.d + params.g_spec.derivative(x[1]))
            - params.b * params.c;
        r.amax() <= residual_tol(params, x[0], x[1]) && det > T::zero()
    };
    let mut r = eval(&x);
    for _ in 0..NEWTON_MAX_ITER {
        if converged(&x, &r) {
            return Ok(Equilibrium { u_star: x[0], v_star: x[1] });
        }
        let jac = Matrix2::new(
            -params.a - params.f_spec.derivative(x[0]),
            params.b,
            params.c,
            -params.d - params.g_spec.derivative(x[1]),
        );
        let Some(inv) = jac.try_inverse() else { break };
        let delta = -(inv * r);
        let mut step = T::one();
        let mut accepted = false;
        for _ in 0..40 {
            let trial = x + delta * step;
            if trial[0] > T::zero() && trial[1] > T::zero() {
                let rt = eval(&trial);
                if rt.amax() < r.amax() {
                    x = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            step *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    if converged(&x, &r) {
        return Ok(Equilibrium { u_star: x[0], v_star: x[1] });
    }
    Err(Error::NumericalFailure {
        message: "equilibrium Newton iteration did not converge".into(),
        residual: r.amax().as_f64(),
        iterate: vec![x[0].as_f64(), x[1].as_f64()],
    })
}

fn default_guess<T: Real>(params: &ModelParams<T>) -> (T, T) {
    let ratio = (params.b * params.c / (params.a * params.d)).max(T::lit(1.0 + 1e-3));
    let level = |p: T| ratio.powf(T::one() / (p - T::one()));
    let k = invariant_box(params, T::zero(), T::zero());
    (
        level(params.f_spec.p).max(k),
        level(params.g_spec.p).max(k),
    )
}

/// Unique positive equilibrium, by damped Newton from a point above it,
/// falling back to long-time integration when Newton stalls.
pub fn solve_equilibrium<T: Real>(params: &ModelParams<T>) -> Result<Equilibrium<T>> {
    solve_equilibrium_from(params, default_guess(params))
}

/// [`solve_equilibrium`] from a caller-chosen positive starting point.
pub fn solve_equilibrium_from<T: Real>(
    params: &ModelParams<T>,
    guess: (T, T),
) -> Result<Equilibrium<T>> {
    let report = validate(params, true);
    if !report.is_valid() {
        return Err(Error::Domain(report.violations.join("; ")));
    }
    if !(guess.0 > T::zero()) || !(guess.1 > T::zero()) {
        return Err(Error::Domain("equilibrium guess must be positive".into()));
    }
    match damped_newton(params, guess) {
        Ok(eq) => Ok(eq),
        Err(newton_err) => {
            let dt = max_stable_dt(params, guess.0, guess.1);
            let Ok(end) = integrate_endpoint(params, guess.0, guess.1, T::lit(1000.0), dt) else {
                return Err(newton_err);
            };
            damped_newton(params, end)
        }
    }
}
