use coopfront::analysis::{
    classify, fit_speed_and_drift, front_speed_series, profile_error, Thresholds, VerdictKind,
};
use coopfront::fbsolver::{init_state, run, RunSettings, Trajectory};
use coopfront::model::{make_initial_preset, ModelParams};
use coopfront::semiwave::{solve_semiwave, solve_speed, SemiWaveSettings, SemiWaveSolution};
use coopfront::critical_length;
use std::sync::OnceLock;

fn r() -> ModelParams {
    ModelParams::reference()
}

fn thresholds() -> Thresholds {
    Thresholds::new(critical_length(&r(), 1e-12).unwrap())
}

fn golden() -> &'static SemiWaveSolution {
    static SOL: OnceLock<SemiWaveSolution> = OnceLock::new();
    SOL.get_or_init(|| {
        let settings = SemiWaveSettings::default();
        let speed = solve_speed(&r(), 1e-8, &settings).unwrap();
        solve_semiwave(&r(), speed.s_mu_rho, &settings).unwrap()
    })
}

fn reference_run(h0: f64, amp: f64, t_end: f64, reference: Option<&SemiWaveSolution>) -> Trajectory {
    let init = make_initial_preset(h0, amp, amp, 201).unwrap();
    let settings = RunSettings { m: 400, dt: 0.01, t_end, sample_every: 0.5, snapshot_times: vec![] };
    run(&r(), &init, &settings, reference).unwrap()
}

#[test]
fn verdicts_are_stable_in_run_length() {
    let th = thresholds();
    for (h0, amp, expected) in [(3.0, 0.5, VerdictKind::Spreading), (0.5, 0.01, VerdictKind::Vanishing)] {
        let kinds: Vec<VerdictKind> = [30.0, 60.0, 120.0]
            .iter()
            .map(|&t_end| classify(&reference_run(h0, amp, t_end, None), &th).kind)
            .collect();
        let opposite = match expected {
            VerdictKind::Spreading => VerdictKind::Vanishing,
            _ => VerdictKind::Spreading,
        };
        assert!(!kinds.contains(&opposite), "{kinds:?}");
        assert_eq!(*kinds.last().unwrap(), expected);
    }
}

#[test]
fn spreading_fit_matches_semiwave_speed() {
    let sol = golden();
    let traj = reference_run(3.0, 0.5, 60.0, Some(sol));
    let fit = fit_speed_and_drift(&traj, 0.4).unwrap();
    assert!((fit.s_hat - sol.s).abs() / sol.s <= 0.02);
    assert!((fit.s_hat_left - fit.s_hat).abs() / fit.s_hat <= 0.01);
    assert!(fit.residual_right.is_finite() && fit.residual_left.is_finite());
    let series = front_speed_series(&traj, 0.4);
    assert!((series.trailing_mean_right - sol.s).abs() / sol.s <= 0.02);

    let err_at = |t: f64| {
        traj.samples.iter().find(|s| s.t == t).unwrap().profile_err_right.unwrap()
    };
    assert!(err_at(50.0) < err_at(10.0));
    assert!(traj.last().profile_err_right.unwrap() <= 0.05 * sol.u_star);
}

#[test]
fn reflected_semiwave_has_zero_profile_error() {
    let sol = golden();
    let init = make_initial_preset(50.0, 0.5, 0.5, 11).unwrap();
    let mut state = init_state(&r(), &init, 1000).unwrap();
    let x = state.physical_nodes();
    for (i, &xi) in x.iter().enumerate() {
        let (u, v) = if xi >= 0.0 { sol.eval(state.h - xi) } else { sol.eval(xi - state.g) };
        state.u[i] = u;
        state.v[i] = v;
    }
    let (right, left) = profile_error(&state, sol).unwrap();
    assert!(right <= 1e-12 && left <= 1e-12, "{right} {left}");
}

#[test]
fn profile_error_needs_both_halves() {
    let init = make_initial_preset(2.0, 0.5, 0.5, 11).unwrap();
    let mut state = init_state(&r(), &init, 200).unwrap();
    state.g += 5.0;
    state.h += 5.0;
    assert!(profile_error(&state, golden()).is_err());
}
