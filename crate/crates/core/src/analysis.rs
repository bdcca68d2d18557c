//! Post-processing of free-boundary trajectories: dichotomy verdicts,
//! asymptotic speed and drift fits, and distances to the semi-wave.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbsolver::{FrontState, Sample, Trajectory};
use crate::linalg::fit_line;
use crate::real::Real;
use crate::semiwave::SemiWaveSolution;

/// Fixed finite-run proxies for the asymptotic alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Thresholds<T = f64> {
    pub vanish_tol: T,
    pub stall_tol: T,
    /// Spreading needs a habitat wider than `span_factor * l_star`.
    pub span_factor: T,
    pub l_star: T,
    /// Trailing fraction of the run inspected by the vanishing rule.
    pub trailing_fraction: T,
    pub min_samples: usize,
}

impl<T: Real> Thresholds<T> {
    pub fn new(l_star: T) -> Self {
        Self {
            vanish_tol: T::lit(1e-4),
            stall_tol: T::lit(1e-3),
            span_factor: T::lit(4.0),
            l_star,
            trailing_fraction: T::lit(0.2),
            min_samples: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Spreading,
    Vanishing,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Evidence<T = f64> {
    pub final_span: T,
    pub final_max_density: T,
    /// Mean half-width growth rate `(h' - g')/2` over the trailing window.
    pub speed_estimate: T,
    /// Length of the final stretch during which both fronts were stalled.
    pub stall_duration: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Verdict<T = f64> {
    pub kind: VerdictKind,
    pub evidence: Evidence<T>,
}

fn trailing<T: Real>(samples: &[Sample<T>], fraction: T) -> &[Sample<T>] {
    let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
        return samples;
    };
    let cut = last.t - fraction * (last.t - first.t);
    let start = samples.iter().position(|s| s.t >= cut).unwrap_or(samples.len() - 1);
    &samples[start..]
}

fn mean<T: Real>(values: impl Iterator<Item = T>) -> T {
    let (sum, n) = values.fold((T::zero(), 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        T::zero()
    } else {
        sum / T::from_count(n)
    }
}

/// Spreading, vanishing or undecided, from the trailing part of the run.
pub fn classify<T: Real>(traj: &Trajectory<T>, th: &Thresholds<T>) -> Verdict<T> {
    let samples = &traj.samples;
    let Some(last) = samples.last() else {
        return Verdict {
            kind: VerdictKind::Undecided,
            evidence: Evidence {
                final_span: T::zero(),
                final_max_density: T::zero(),
                speed_estimate: T::zero(),
                stall_duration: T::zero(),
            },
        };
    };
    let tail = trailing(samples, th.trailing_fraction);
    let stalled = |s: &Sample<T>| s.hprime < th.stall_tol && -s.gprime < th.stall_tol;
    let stall_start = samples
        .iter()
        .rposition(|s| !stalled(s))
        .map_or(samples[0].t, |i| samples.get(i + 1).map_or(last.t, |s| s.t));
    let evidence = Evidence {
        final_span: last.h - last.g,
        final_max_density: last.max_u.max(last.max_v),
        speed_estimate: mean(tail.iter().map(|s| (s.hprime - s.gprime) * T::lit(0.5))),
        stall_duration: last.t - stall_start,
    };
    let kind = if samples.len() < th.min_samples {
        VerdictKind::Undecided
    } else if evidence.final_span > th.span_factor * th.l_star && evidence.speed_estimate > T::zero() {
        VerdictKind::Spreading
    } else if evidence.final_max_density < th.vanish_tol && tail.iter().all(stalled) {
        VerdictKind::Vanishing
    } else {
        VerdictKind::Undecided
    };
    Verdict { kind, evidence }
}

/// Least-squares lines `h ~ s_hat t + h*` and `-g ~ s_hat_left t - g*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SpeedFit<T = f64> {
    pub s_hat: T,
    pub h_star_hat: T,
    pub s_hat_left: T,
    pub g_star_hat: T,
    pub window: (T, T),
    pub samples_used: usize,
    /// `max |h - s_hat t - h*|` over the window.
    pub residual_right: T,
    /// `max |g + s_hat_left t - g*|` over the window.
    pub residual_left: T,
}

/// Fits over the trailing `window_fraction` of the run.
pub fn fit_speed_and_drift<T: Real>(traj: &Trajectory<T>, window_fraction: T) -> Result<SpeedFit<T>> {
    if !(window_fraction > T::zero() && window_fraction < T::one()) {
        return Err(Error::Domain(format!(
            "window_fraction must lie in (0, 1) (got {window_fraction})"
        )));
    }
    let (Some(first), Some(last)) = (traj.samples.first(), traj.samples.last()) else {
        return Err(Error::Domain("empty trajectory".into()));
    };
    let t_lo = last.t - window_fraction * (last.t - first.t);
    fit_speed_and_drift_between(traj, t_lo, last.t)
}

/// Fits over the samples with `t_lo <= t <= t_hi`.
pub fn fit_speed_and_drift_between<T: Real>(
    traj: &Trajectory<T>,
    t_lo: T,
    t_hi: T,
) -> Result<SpeedFit<T>> {
    let window: Vec<&Sample<T>> = traj
        .samples
        .iter()
        .filter(|s| s.t >= t_lo && s.t <= t_hi)
        .collect();
    if window.len() <= 2 {
        return Err(Error::Domain(format!(
            "fit window [{t_lo}, {t_hi}] holds {} samples; need at least 3",
            window.len()
        )));
    }
    let t: Vec<T> = window.iter().map(|s| s.t).collect();
    let h: Vec<T> = window.iter().map(|s| s.h).collect();
    let neg_g: Vec<T> = window.iter().map(|s| -s.g).collect();
    let degenerate = || Error::Domain("fit window has no time spread".into());
    let (s_hat, h_star_hat) = fit_line(&t, &h).ok_or_else(degenerate)?;
    let (s_hat_left, c) = fit_line(&t, &neg_g).ok_or_else(degenerate)?;
    let g_star_hat = -c;
    let residual = |y: &[T], slope: T, icpt: T| {
        t.iter()
            .zip(y)
            .fold(T::zero(), |m, (&ti, &yi)| m.max((yi - slope * ti - icpt).abs()))
    };
    Ok(SpeedFit {
        s_hat,
        h_star_hat,
        s_hat_left,
        g_star_hat,
        window: (t_lo, t_hi),
        samples_used: window.len(),
        residual_right: residual(&h, s_hat, h_star_hat),
        residual_left: residual(&neg_g, s_hat_left, c),
    })
}

/// Sup-norm distance of the densities to the semi-wave reflected about
/// each front: `(err_right, err_left)` over `x >= 0` and `x <= 0`.
pub fn profile_error<T: Real>(state: &FrontState<T>, sol: &SemiWaveSolution<T>) -> Result<(T, T)> {
    let x = state.physical_nodes();
    let mut right: Option<T> = None;
    let mut left: Option<T> = None;
    for (i, &xi) in x.iter().enumerate() {
        let (u, v) = (state.u[i], state.v[i]);
        let gap = |(phi, psi): (T, T)| (u - phi).abs().max((v - psi).abs());
        if xi >= T::zero() {
            let e = gap(sol.eval(state.h - xi));
            right = Some(right.map_or(e, |m| m.max(e)));
        }
        if xi <= T::zero() {
            let e = gap(sol.eval(xi - state.g));
            left = Some(left.map_or(e, |m| m.max(e)));
        }
    }
    match (right, left) {
        (Some(r), Some(l)) => Ok((r, l)),
        _ => Err(Error::Domain("habitat does not straddle the origin".into())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FrontSpeedSeries<T = f64> {
    pub t: Vec<T>,
    pub right: Vec<T>,
    /// `-g'(t)`.
    pub left: Vec<T>,
    pub trailing_mean_right: T,
    pub trailing_mean_left: T,
}

/// Recorded Stefan speeds, with means over the trailing `window_fraction`.
pub fn front_speed_series<T: Real>(traj: &Trajectory<T>, window_fraction: T) -> FrontSpeedSeries<T> {
    let tail = trailing(&traj.samples, window_fraction);
    FrontSpeedSeries {
        t: traj.samples.iter().map(|s| s.t).collect(),
        right: traj.samples.iter().map(|s| s.hprime).collect(),
        left: traj.samples.iter().map(|s| -s.gprime).collect(),
        trailing_mean_right: mean(tail.iter().map(|s| s.hprime)),
        trailing_mean_left: mean(tail.iter().map(|s| -s.gprime)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fbsolver::{FrontState, RunSettings};
    use crate::model::ModelParams;

    fn synthetic(n: usize, speed: f64, offset: f64) -> Trajectory<f64> {
        let samples = (0..n)
            .map(|k| {
                let t = k as f64 * 0.5;
                Sample {
                    t,
                    g: -(speed * t + offset),
                    h: speed * t + offset,
                    gprime: -speed,
                    hprime: speed,
                    max_u: 1.0,
                    max_v: 1.0,
                    profile_err_left: None,
                    profile_err_right: None,
                }
            })
            .collect();
        let state = FrontState {
            t: 0.0,
            g: -1.0,
            h: 1.0,
            xi: vec![-1.0, 0.0, 1.0],
            u: vec![0.0; 3],
            v: vec![0.0; 3],
            density_bound: 1.0,
        };
        Trajectory {
            samples,
            params: ModelParams::reference(),
            settings: RunSettings { m: 2, dt: 0.1, t_end: 1.0, sample_every: 0.5, snapshot_times: vec![] },
            snapshots: vec![],
            final_state: state,
            steps: 0,
        }
    }

    #[test]
    fn exact_line_is_recovered() {
        let fit = fit_speed_and_drift(&synthetic(40, 1.3, 0.7), 0.4).unwrap();
        assert!((fit.s_hat - 1.3).abs() < 1e-12);
        assert!((fit.h_star_hat - 0.7).abs() < 1e-12);
        assert!((fit.s_hat_left - 1.3).abs() < 1e-12);
        assert!((fit.g_star_hat + 0.7).abs() < 1e-12);
        assert!(fit.residual_right < 1e-12 && fit.residual_left < 1e-12);
    }

    #[test]
    fn fit_is_affine_equivariant() {
        let mut traj = synthetic(40, 0.9, 0.2);
        for (k, s) in traj.samples.iter_mut().enumerate() {
            s.h += 0.01 * ((k * 7) % 5) as f64;
        }
        let base = fit_speed_and_drift(&traj, 0.5).unwrap();
        for s in traj.samples.iter_mut() {
            s.h += 2.5;
        }
        let shifted = fit_speed_and_drift(&traj, 0.5).unwrap();
        assert!((shifted.s_hat - base.s_hat).abs() < 1e-12);
        assert!((shifted.h_star_hat - base.h_star_hat - 2.5).abs() < 1e-12);
    }

    #[test]
    fn narrow_window_rejected() {
        let traj = synthetic(40, 1.0, 0.0);
        assert!(matches!(
            fit_speed_and_drift_between(&traj, 3.0, 3.6),
            Err(Error::Domain(_))
        ));
        assert!(fit_speed_and_drift(&traj, 1.5).is_err());
    }

    #[test]
    fn short_trajectory_is_undecided() {
        let v = classify(&synthetic(3, 1.0, 20.0), &Thresholds::new(1.5));
        assert_eq!(v.kind, VerdictKind::Undecided);
    }

    #[test]
    fn synthetic_verdicts() {
        let th = Thresholds::new(std::f64::consts::FRAC_PI_2);
        assert_eq!(classify(&synthetic(40, 1.0, 1.0), &th).kind, VerdictKind::Spreading);
        let mut dying = synthetic(40, 0.0, 1.0);
        for s in dying.samples.iter_mut() {
            s.max_u = 1e-6;
            s.max_v = 1e-6;
        }
        let v = classify(&dying, &th);
        assert_eq!(v.kind, VerdictKind::Vanishing);
        assert_eq!(v.evidence.stall_duration, 19.5);
    }

    #[test]
    fn constant_speed_trailing_mean() {
        let series = front_speed_series(&synthetic(20, 0.75, 0.0), 0.4);
        assert_eq!(series.trailing_mean_right, 0.75);
        assert_eq!(series.trailing_mean_left, 0.75);
        assert_eq!(series.right.len(), 20);
    }
}
