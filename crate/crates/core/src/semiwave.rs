//! Monotone semi-wave profiles on a truncated half-line and the speed at
//! which they are consistent with the Stefan front law.
//!
//! Both solvers discretise the same stationary system
//!
//! ```text
//! d1 phi'' - s phi' - a phi + b psi - F(phi) = 0
//! d2 psi'' - s psi' + c phi - d psi - G(psi) = 0
//! ```
//!
//! with second-order central differences on `N + 1` uniform nodes over
//! `[0, L]`, `phi(0) = psi(0) = 0` and the clamp `(phi, psi)(L) = (u*, v*)`.
//! Relaxation marches the parabolic version to steady state; Newton solves
//! the collocation equations directly. Agreement of the two is the check on
//! each.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{solve_equilibrium, Equilibrium};
use crate::error::{Error, Result};
use crate::linalg::{fit_line, interp_uniform, solve_block_tridiagonal};
use crate::model::ModelParams;
use crate::real::Real;
use crate::spectral::{critical_speed, tail_rate};

pub const MIN_NODES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Relaxation,
    Newton,
}

/// Numerical settings for one semi-wave solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct SemiWaveSettings<T = f64> {
    /// Truncation length `L`.
    pub length: T,
    /// Number of cells `N` (the grid has `N + 1` nodes).
    pub nodes: usize,
    /// Pseudo-time budget for relaxation.
    pub t_relax: T,
    /// Pseudo-time step for relaxation.
    pub dt: T,
    /// Stopping threshold on the sup-norm change between relaxation steps.
    pub relax_tol: T,
    /// Stopping threshold on the Newton residual; raised to the rounding
    /// floor `16 eps max(u*,v*) max(d1,d2) / h^2` on very fine grids.
    pub newton_tol: T,
    /// Preferred solver; Newton falls back to relaxation on failure.
    pub method: SolverMethod,
}

impl<T: Real> Default for SemiWaveSettings<T> {
    fn default() -> Self {
        Self {
            length: T::lit(40.0),
            nodes: 2000,
            t_relax: T::lit(5000.0),
            dt: T::one(),
            relax_tol: T::lit(1e-10),
            newton_tol: T::lit(1e-11),
            method: SolverMethod::Newton,
        }
    }
}

impl<T: Real> SemiWaveSettings<T> {
    pub fn with_grid(length: T, nodes: usize) -> Self {
        Self { length, nodes, ..Self::default() }
    }
}

/// Sampled semi-wave at speed `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SemiWaveSolution<T = f64> {
    pub s: T,
    pub length: T,
    pub xi: Vec<T>,
    pub phi: Vec<T>,
    pub psi: Vec<T>,
    pub dphi0: T,
    pub dpsi0: T,
    /// Empirical exponential approach rate to the equilibrium, when the
    /// fit window holds enough resolvable nodes.
    pub fitted_tail: Option<T>,
    /// Largest discrete residual over interior nodes.
    pub residual_max: T,
    pub u_star: T,
    pub v_star: T,
    pub method: SolverMethod,
    /// Relaxation steps or Newton iterations used.
    pub iterations: usize,
}

impl<T: Real> SemiWaveSolution<T> {
    pub fn spacing(&self) -> T {
        self.length / T::from_count(self.xi.len() - 1)
    }

    /// Profile at distance `xi` behind the front (linear interpolation,
    /// zero ahead of the front, the equilibrium beyond the truncation).
    pub fn eval(&self, xi: T) -> (T, T) {
        if xi <= T::zero() {
            return (T::zero(), T::zero());
        }
        if xi >= self.length {
            return (self.u_star, self.v_star);
        }
        let h = self.spacing();
        (
            interp_uniform(T::zero(), h, &self.phi, xi),
            interp_uniform(T::zero(), h, &self.psi, xi),
        )
    }
}

/// One-sided second-order slope at the first node:
/// `(-3 w0 + 4 w1 - w2) / (2 h)`.
#[inline]
pub fn front_slope<T: Real>(values: &[T], spacing: T) -> T {
    (-T::lit(3.0) * values[0] + T::lit(4.0) * values[1] - values[2]) / (T::lit(2.0) * spacing)
}

/// `(phi'(0), psi'(0))`; both must be positive.
pub fn front_derivatives<T: Real>(sol: &SemiWaveSolution<T>) -> Result<(T, T)> {
    let h = sol.spacing();
    let dphi = front_slope(&sol.phi, h);
    let dpsi = front_slope(&sol.psi, h);
    if !(dphi > T::zero()) || !(dpsi > T::zero()) {
        return Err(Error::Assertion(format!(
            "front derivatives must be positive (got {dphi}, {dpsi})"
        )));
    }
    Ok((dphi, dpsi))
}

/// Least-squares decay rate of `u* - phi` over `xi in [0.4 L, 0.7 L]`.
pub fn fit_tail<T: Real>(sol: &SemiWaveSolution<T>) -> Result<T> {
    fit_tail_profile(&sol.xi, &sol.phi, sol.u_star, sol.length)
}

/// [`fit_tail`] on raw samples.
pub fn fit_tail_profile<T: Real>(xi: &[T], phi: &[T], u_star: T, length: T) -> Result<T> {
    let lo = T::lit(0.4) * length;
    let hi = T::lit(0.7) * length;
    let floor = T::lit(1e-12).max(T::lit(1e3) * T::EPS * u_star.abs());
    let (xs, ys): (Vec<T>, Vec<T>) = xi
        .iter()
        .zip(phi)
        .filter(|(&x, &p)| x >= lo && x <= hi && u_star - p > floor)
        .map(|(&x, &p)| (x, (u_star - p).ln()))
        .unzip();
    if xs.len() < 10 {
        return Err(Error::Domain(format!(
            "tail fit window holds only {} usable nodes",
            xs.len()
        )));
    }
    let (slope, _) = fit_line(&xs, &ys)
        .ok_or_else(|| Error::Domain("degenerate tail fit window".into()))?;
    if !(slope < T::zero()) {
        return Err(Error::Domain("profile does not approach the equilibrium".into()));
    }
    Ok(-slope)
}

struct Grid<T> {
    s: T,
    h: T,
    n: usize,
    eq: Equilibrium<T>,
}

impl<T: Real> Grid<T> {
    fn new(params: &ModelParams<T>, s: T, length: T, nodes: usize) -> Result<Self> {
        if !(s >= T::zero()) {
            return Err(Error::Domain("wave speed must be nonnegative".into()));
        }
        if !(length > T::zero()) {
            return Err(Error::Domain("truncation length must be positive".into()));
        }
        if nodes < MIN_NODES {
            return Err(Error::Domain(format!("semi-wave grid needs N >= {MIN_NODES}")));
        }
        let eq = solve_equilibrium(params)?;
        let rate = tail_rate(params, s, &eq)?;
        if length * rate < T::lit(10.0) {
            return Err(Error::Domain(format!(
                "truncation length {length} is shorter than 10 decay lengths ({})",
                T::lit(10.0) / rate
            )));
        }
        Ok(Self {
            s,
            h: length / T::from_count(nodes),
            n: nodes,
            eq,
        })
    }

    /// Residual level reachable in floating point: node values carry
    /// relative rounding `eps`, amplified by `d / h^2` in the second
    /// difference.
    fn rounding_floor(&self, params: &ModelParams<T>) -> T {
        let scale = self.eq.u_star.max(self.eq.v_star) * params.d1.max(params.d2);
        T::lit(16.0) * T::EPS * scale / (self.h * self.h)
    }

    fn xi(&self) -> Vec<T> {
        (0..=self.n).map(|i| self.h * T::from_count(i)).collect()
    }

    /// Coefficients of the neighbour values in the discrete operator
    /// `d w'' - s w'` for one component: (left, right).
    fn stencil(&self, diff: T) -> (T, T) {
        let h2 = self.h * self.h;
        let adv = self.s / (T::lit(2.0) * self.h);
        (diff / h2 + adv, diff / h2 - adv)
    }

    fn residuals(&self, params: &ModelParams<T>, w: &[T], z: &[T]) -> Vec<Vector2<T>> {
        let h2 = self.h * self.h;
        let adv = self.s / (T::lit(2.0) * self.h);
        (1..self.n)
            .map(|i| {
                let lap_w = (w[i + 1] - w[i] - (w[i] - w[i - 1])) / h2;
                let lap_z = (z[i + 1] - z[i] - (z[i] - z[i - 1])) / h2;
                let (fw, fz) = params.reaction(w[i], z[i]);
                Vector2::new(
                    params.d1 * lap_w - adv * (w[i + 1] - w[i - 1]) + fw,
                    params.d2 * lap_z - adv * (z[i + 1] - z[i - 1]) + fz,
                )
            })
            .collect()
    }

    fn ramp(&self) -> (Vec<T>, Vec<T>) {
        let last = T::from_count(self.n);
        let w = (0..=self.n).map(|i| self.eq.u_star * T::from_count(i) / last).collect();
        let z = (0..=self.n).map(|i| self.eq.v_star * T::from_count(i) / last).collect();
        (w, z)
    }

    /// `(u*, v*) * (1 - exp(-rate xi))`, pinned to the clamp at `L`.
    fn exponential_start(&self, rate: T) -> (Vec<T>, Vec<T>) {
        let shape = |i: usize| {
            if i == self.n {
                T::one()
            } else {
                T::one() - (-(rate * self.h * T::from_count(i))).exp()
            }
        };
        (
            (0..=self.n).map(|i| self.eq.u_star * shape(i)).collect(),
            (0..=self.n).map(|i| self.eq.v_star * shape(i)).collect(),
        )
    }
}

fn sup_residual<T: Real>(r: &[Vector2<T>]) -> T {
    r.iter().fold(T::zero(), |m, v| m.max(v.amax()))
}

/// Parabolic relaxation to the steady semi-wave from the linear ramp.
///
/// Each pseudo-time step is implicit in the linear part (diffusion,
/// advection, mortality and the cooperative coupling) and lags the loss
/// ratio `F(w)/w`, which keeps the step matrix an M-matrix.
pub fn solve_semiwave_relax<T: Real>(
    params: &ModelParams<T>,
    s: T,
    length: T,
    nodes: usize,
    t_relax: T,
    dt: T,
) -> Result<SemiWaveSolution<T>> {
    let settings = SemiWaveSettings {
        length,
        nodes,
        t_relax,
        dt,
        ..SemiWaveSettings::default()
    };
    relax_with(params, s, &settings)
}

fn relax_with<T: Real>(
    params: &ModelParams<T>,
    s: T,
    settings: &SemiWaveSettings<T>,
) -> Result<SemiWaveSolution<T>> {
    let grid = Grid::new(params, s, settings.length, settings.nodes)?;
    if !(settings.dt > T::zero()) || !(settings.t_relax > T::zero()) {
        return Err(Error::Domain("relaxation needs positive dt and t_relax".into()));
    }
    let (mut w, mut z) = grid.ramp();
    let n_int = grid.n - 1;
    let inv_dt = T::one() / settings.dt;
    let (lw, rw) = grid.stencil(params.d1);
    let (lz, rz) = grid.stencil(params.d2);
    let lower = vec![Matrix2::new(-lw, T::zero(), T::zero(), -lz); n_int];
    let upper = vec![Matrix2::new(-rw, T::zero(), T::zero(), -rz); n_int];
    let mut diag = vec![Matrix2::zeros(); n_int];
    let mut rhs = vec![Vector2::zeros(); n_int];
    let max_steps = (settings.t_relax / settings.dt).ceil().as_f64() as usize;
    let mut delta = T::max_value().unwrap_or_else(T::one);
    for step in 1..=max_steps {
        for (j, block) in diag.iter_mut().enumerate() {
            let i = j + 1;
            *block = Matrix2::new(
                inv_dt + lw + rw + params.a + params.f_spec.ratio(w[i]),
                -params.b,
                -params.c,
                inv_dt + lz + rz + params.d + params.g_spec.ratio(z[i]),
            );
            rhs[j] = Vector2::new(w[i] * inv_dt, z[i] * inv_dt);
        }
        rhs[n_int - 1] += Vector2::new(rw * grid.eq.u_star, rz * grid.eq.v_star);
        solve_block_tridiagonal(&lower, &diag, &upper, &mut rhs)?;
        delta = T::zero();
        for (j, x) in rhs.iter().enumerate() {
            let i = j + 1;
            delta = delta.max((x[0] - w[i]).abs()).max((x[1] - z[i]).abs());
            w[i] = x[0];
            z[i] = x[1];
        }
        if !delta.is_finite() {
            break;
        }
        if delta <= settings.relax_tol {
            return finish(params, &grid, w, z, SolverMethod::Relaxation, step);
        }
    }
    Err(Error::NumericalFailure {
        message: format!("relaxation did not converge within t = {}", settings.t_relax),
        residual: delta.as_f64(),
        iterate: Vec::new(),
    })
}

/// Damped Newton on the collocation equations, started from
/// `(u*, v*) (1 - exp(-mu_hat1 xi))`.
pub fn solve_semiwave_newton<T: Real>(
    params: &ModelParams<T>,
    s: T,
    length: T,
    nodes: usize,
) -> Result<SemiWaveSolution<T>> {
    let settings = SemiWaveSettings::with_grid(length, nodes);
    newton_with(params, s, &settings, None)
}

/// [`solve_semiwave_newton`] from a caller-supplied iterate (node values on
/// the same grid; end values are overwritten by the boundary conditions).
pub fn solve_semiwave_newton_from<T: Real>(
    params: &ModelParams<T>,
    s: T,
    length: T,
    nodes: usize,
    start: (&[T], &[T]),
) -> Result<SemiWaveSolution<T>> {
    let settings = SemiWaveSettings::with_grid(length, nodes);
    newton_with(params, s, &settings, Some(start))
}

fn newton_with<T: Real>(
    params: &ModelParams<T>,
    s: T,
    settings: &SemiWaveSettings<T>,
    start: Option<(&[T], &[T])>,
) -> Result<SemiWaveSolution<T>> {
    let grid = Grid::new(params, s, settings.length, settings.nodes)?;
    let (mut w, mut z) = match start {
        Some((w0, z0)) => {
            if w0.len() != grid.n + 1 || z0.len() != grid.n + 1 {
                return Err(Error::Domain("starting iterate has the wrong length".into()));
            }
            (w0.to_vec(), z0.to_vec())
        }
        None => {
            let rate = tail_rate(params, s, &grid.eq)?;
            grid.exponential_start(rate)
        }
    };
    w[0] = T::zero();
    z[0] = T::zero();
    w[grid.n] = grid.eq.u_star;
    z[grid.n] = grid.eq.v_star;

    let n_int = grid.n - 1;
    let (lw, rw) = grid.stencil(params.d1);
    let (lz, rz) = grid.stencil(params.d2);
    let lower = vec![Matrix2::new(lw, T::zero(), T::zero(), lz); n_int];
    let upper = vec![Matrix2::new(rw, T::zero(), T::zero(), rz); n_int];
    let mut diag = vec![Matrix2::zeros(); n_int];
    let tol = settings.newton_tol.max(grid.rounding_floor(params));
    let mut res = grid.residuals(params, &w, &z);
    let mut norm = sup_residual(&res);
    for iter in 0..100 {
        if norm <= tol {
            return finish(params, &grid, w, z, SolverMethod::Newton, iter);
        }
        for (j, block) in diag.iter_mut().enumerate() {
            let i = j + 1;
            *block = Matrix2::new(
                -(lw + rw) - params.a - params.f_spec.derivative(w[i]),
                params.b,
                params.c,
                -(lz + rz) - params.d - params.g_spec.derivative(z[i]),
            );
        }
        let mut step: Vec<Vector2<T>> = res.iter().map(|r| -r).collect();
        solve_block_tridiagonal(&lower, &diag, &upper, &mut step)?;
        let mut damping = T::one();
        let mut accepted = false;
        for _ in 0..30 {
            let mut tw = w.clone();
            let mut tz = z.clone();
            for (j, d) in step.iter().enumerate() {
                tw[j + 1] += damping * d[0];
                tz[j + 1] += damping * d[1];
            }
            let trial = grid.residuals(params, &tw, &tz);
            let trial_norm = sup_residual(&trial);
            if trial_norm < norm {
                w = tw;
                z = tz;
                res = trial;
                norm = trial_norm;
                accepted = true;
                break;
            }
            damping *= T::lit(0.5);
        }
        if !accepted {
            break;
        }
    }
    if norm <= tol {
        return finish(params, &grid, w, z, SolverMethod::Newton, 100);
    }
    Err(Error::NumericalFailure {
        message: "semi-wave Newton iteration stalled".into(),
        residual: norm.as_f64(),
        iterate: w.iter().chain(&z).map(|x| x.as_f64()).collect(),
    })
}

/// Solves with the preferred method; Newton failures fall back to relaxation.
pub fn solve_semiwave<T: Real>(
    params: &ModelParams<T>,
    s: T,
    settings: &SemiWaveSettings<T>,
) -> Result<SemiWaveSolution<T>> {
    match settings.method {
        SolverMethod::Relaxation => relax_with(params, s, settings),
        SolverMethod::Newton => match newton_with(params, s, settings, None) {
            Err(Error::NumericalFailure { .. }) => relax_with(params, s, settings),
            other => other,
        },
    }
}

fn finish<T: Real>(
    params: &ModelParams<T>,
    grid: &Grid<T>,
    phi: Vec<T>,
    psi: Vec<T>,
    method: SolverMethod,
    iterations: usize,
) -> Result<SemiWaveSolution<T>> {
    let residual_max = sup_residual(&grid.residuals(params, &phi, &psi));
    let xi = grid.xi();
    let length = grid.h * T::from_count(grid.n);
    let fitted_tail = fit_tail_profile(&xi, &phi, grid.eq.u_star, length).ok();
    let mut sol = SemiWaveSolution {
        s: grid.s,
        length,
        xi,
        phi,
        psi,
        dphi0: T::zero(),
        dpsi0: T::zero(),
        fitted_tail,
        residual_max,
        u_star: grid.eq.u_star,
        v_star: grid.eq.v_star,
        method,
        iterations,
    };
    let slack = residual_max.max(T::lit(64.0) * T::EPS * sol.u_star.max(sol.v_star));
    check_profile(&sol.phi, sol.u_star, slack, "phi")?;
    check_profile(&sol.psi, sol.v_star, slack, "psi")?;
    let (dphi0, dpsi0) = front_derivatives(&sol)?;
    sol.dphi0 = dphi0;
    sol.dpsi0 = dpsi0;
    Ok(sol)
}

/// Front value 0, end value at the equilibrium, values within `(0, top]`
/// and strictly increasing wherever the gap to the equilibrium exceeds
/// `slack` (rounding plus the solver's residual level).
fn check_profile<T: Real>(values: &[T], top: T, slack: T, name: &str) -> Result<()> {
    let n = values.len() - 1;
    if values[0] != T::zero() || (values[n] - top).abs() > slack {
        return Err(Error::Assertion(format!("{name} violates its boundary values")));
    }
    for (i, &v) in values.iter().enumerate().take(n).skip(1) {
        if !(v > T::zero()) || v > top + slack {
            return Err(Error::Assertion(format!("{name}[{i}] = {v} outside (0, {top}]")));
        }
    }
    for i in 0..n {
        let step = values[i + 1] - values[i];
        let saturated = top - values[i] <= slack && step >= -slack;
        if !(step > T::zero()) && !saturated {
            return Err(Error::Assertion(format!(
                "{name} is not strictly increasing at node {i} (speed too close to s* or L too small)"
            )));
        }
    }
    Ok(())
}

/// `f(s) = mu (psi'(0) + rho phi'(0)) - s` from a converged solve.
pub fn speed_residual<T: Real>(
    params: &ModelParams<T>,
    s: T,
    settings: &SemiWaveSettings<T>,
) -> Result<T> {
    let sol = solve_semiwave(params, s, settings)?;
    Ok(stefan_mismatch(params, &sol))
}

fn stefan_mismatch<T: Real>(params: &ModelParams<T>, sol: &SemiWaveSolution<T>) -> T {
    params.mu * (sol.dpsi0 + params.rho * sol.dphi0) - sol.s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpeedSample<T = f64> {
    pub s: T,
    pub f: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpeedResult<T = f64> {
    pub s_mu_rho: T,
    /// `f(s)` along the bisection path, in evaluation order.
    pub f_values: Vec<SpeedSample<T>>,
    pub bracket_width: T,
    pub s_star: T,
}

/// Bisection for the root of `f` on `[0, 0.999 s*]`.
pub fn solve_speed<T: Real>(
    params: &ModelParams<T>,
    speed_tol: T,
    settings: &SemiWaveSettings<T>,
) -> Result<SpeedResult<T>> {
    if !(speed_tol > T::zero()) {
        return Err(Error::Domain("speed tolerance must be positive".into()));
    }
    if !(params.cooperation_margin() > T::zero()) {
        return Err(Error::Domain("bc−ad must be positive".into()));
    }
    let s_star = critical_speed(params, T::lit(1e-10).max(T::EPS * T::lit(100.0)))?;
    let mut lo = T::zero();
    let mut hi = T::lit(0.999) * s_star;
    let (f_lo, f_hi) = std::thread::scope(|scope| {
        let upper = scope.spawn(|| speed_residual(params, hi, settings));
        let lower = speed_residual(params, lo, settings);
        (lower, upper.join().expect("speed residual worker panicked"))
    });
    let (f_lo, f_hi) = (f_lo?, f_hi?);
    let mut samples = vec![SpeedSample { s: lo, f: f_lo }, SpeedSample { s: hi, f: f_hi }];
    if !(f_lo > T::zero()) || !(f_hi < T::zero()) {
        return Err(Error::numerical(
            format!("f has no sign change on [0, 0.999 s*]: f(0) = {f_lo}, f(hi) = {f_hi}"),
            f_lo.as_f64(),
        ));
    }
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        let f_mid = speed_residual(params, mid, settings)?;
        samples.push(SpeedSample { s: mid, f: f_mid });
        if f_mid > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= speed_tol && f_mid.abs() <= speed_tol) || f_mid == T::zero() {
            return Ok(SpeedResult {
                s_mu_rho: mid,
                f_values: samples,
                bracket_width: hi - lo,
                s_star,
            });
        }
    }
    Err(Error::numerical("speed bisection did not reach the tolerance", 0.0))
}
