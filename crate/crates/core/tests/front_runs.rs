use coopfront::analysis::{classify, front_speed_series, Thresholds, VerdictKind};
use coopfront::fbsolver::{init_state, run, step, FrontState, RunSettings, Trajectory};
use coopfront::model::{make_initial_preset, ModelParams, NonlinearitySpec};
use coopfront::{critical_length, integrate_homogeneous, Error};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

fn r() -> ModelParams {
    ModelParams::reference()
}

fn settings(m: usize, dt: f64, t_end: f64) -> RunSettings {
    RunSettings { m, dt, t_end, sample_every: 0.5, snapshot_times: vec![] }
}

fn reference_run(h0: f64, amp: f64, t_end: f64) -> Trajectory {
    let init = make_initial_preset(h0, amp, amp, 201).unwrap();
    run(&r(), &init, &settings(400, 0.01, t_end), None).unwrap()
}

fn assert_physical(traj: &Trajectory) {
    let s = &traj.final_state;
    assert!(s.u.iter().chain(&s.v).all(|&x| x >= -1e-12));
    assert!(s.max_u().max(s.max_v()) <= s.density_bound);
    traj.check_fronts().unwrap();
    for w in traj.samples.windows(2) {
        assert!(w[1].h > w[0].h || w[1].hprime == 0.0);
        assert!(w[1].g < w[0].g || w[1].gprime == 0.0);
    }
}

#[test]
fn spreading_reference_run() {
    let traj = reference_run(3.0, 0.5, 60.0);
    let last = traj.last();
    assert!(last.h > 20.0 && last.g < -20.0, "h = {}, g = {}", last.h, last.g);
    assert_physical(&traj);
    for s in &traj.samples {
        assert!((s.g + s.h).abs() <= 1e-9 * (1.0 + s.h.abs()), "asymmetry at t = {}", s.t);
    }
    let verdict = classify(&traj, &Thresholds::new(critical_length(&r(), 1e-12).unwrap()));
    assert_eq!(verdict.kind, VerdictKind::Spreading);
}

#[test]
fn vanishing_reference_run() {
    let traj = reference_run(0.5, 0.01, 60.0);
    let last = traj.last();
    assert!(last.max_u < 1e-4 && last.max_v < 1e-4);
    assert!(last.h - last.g < 2.0 * FRAC_PI_2 + 0.2);
    assert_physical(&traj);
    let verdict = classify(&traj, &Thresholds::new(FRAC_PI_2));
    assert_eq!(verdict.kind, VerdictKind::Vanishing);
    assert!(verdict.evidence.final_span <= 2.0 * FRAC_PI_2 + 0.2);
    let series = front_speed_series(&traj, 0.4);
    assert!(series.trailing_mean_right <= 1e-3 && series.trailing_mean_left <= 1e-3);
}

#[test]
fn densities_stay_below_the_homogeneous_solution() {
    let init = make_initial_preset(3.0, 0.5, 0.8, 201).unwrap();
    let traj = run(&r(), &init, &settings(200, 0.01, 10.0), None).unwrap();
    let ode = integrate_homogeneous(&r(), 0.5, 0.8, 10.0, 1e-3).unwrap();
    for s in &traj.samples {
        let (uh, vh) = ode.at(s.t);
        assert!(s.max_u <= uh + 1e-6, "t = {}: {} > {}", s.t, s.max_u, uh);
        assert!(s.max_v <= vh + 1e-6, "t = {}: {} > {}", s.t, s.max_v, vh);
    }
}

#[test]
fn fronts_converge_under_grid_refinement() {
    let init = make_initial_preset(3.0, 0.5, 0.5, 201).unwrap();
    let coarse = run(&r(), &init, &settings(200, 0.01, 10.0), None).unwrap();
    let fine = run(&r(), &init, &settings(400, 0.005, 10.0), None).unwrap();
    let (hc, hf) = (coarse.last().h, fine.last().h);
    assert!(((hc - hf) / hf).abs() <= 0.02, "{hc} vs {hf}");
}

fn sup_diff(a: &FrontState, b: &FrontState) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .chain(a.v.iter().zip(&b.v))
        .fold((a.h - b.h).abs(), |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn step_halving_has_second_order_local_error() {
    // start past the initial layer: the cosine data does not satisfy the
    // second-order compatibility condition at the fronts
    let init = make_initial_preset(3.0, 0.5, 0.5, 201).unwrap();
    let mut s0 = init_state(&r(), &init, 200).unwrap();
    for _ in 0..1000 {
        s0 = step(&s0, &r(), 1e-3).unwrap();
    }
    let gap = |dt: f64| {
        let one = step(&s0, &r(), dt).unwrap();
        let half = step(&step(&s0, &r(), dt / 2.0).unwrap(), &r(), dt / 2.0).unwrap();
        sup_diff(&one, &half)
    };
    let (e1, e2, e3) = (gap(1e-3), gap(5e-4), gap(2.5e-4));
    for ratio in [e1 / e2, e2 / e3] {
        assert!(ratio > 3.0 && ratio < 5.0, "local error ratios {e1} {e2} {e3}");
    }
}

#[test]
fn crossing_fronts_are_reported() {
    let init = make_initial_preset(1.0, 0.5, 0.5, 201).unwrap();
    let mut s = init_state(&r(), &init, 200).unwrap();
    s.h = s.g;
    assert!(matches!(s.check(), Err(Error::Geometry(_))));
}

#[test]
fn snapshots_are_in_physical_coordinates() {
    let init = make_initial_preset(3.0, 0.5, 0.5, 201).unwrap();
    let mut st = settings(200, 0.01, 2.0);
    st.snapshot_times = vec![1.0, 2.0];
    let traj = run(&r(), &init, &st, None).unwrap();
    let snap = &traj.snapshots[1];
    assert_eq!(snap.t, 2.0);
    assert_eq!(snap.x[0], traj.last().g);
    assert_eq!(*snap.x.last().unwrap(), traj.last().h);
    assert!(snap.x.windows(2).all(|w| w[1] > w[0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn positivity_over_random_parameters(
        d1 in 0.5f64..2.0, d2 in 0.5f64..2.0,
        a in 0.5f64..1.5, d in 0.5f64..1.5,
        extra in 0.1f64..2.0,
        mu in 0.2f64..3.0, rho in 0.0f64..2.0,
        p in 1.5f64..3.0,
        h0 in 0.5f64..3.0, amp_u in 0.05f64..1.5, amp_v in 0.05f64..1.5,
    ) {
        // b c exceeds a d by a margin, which makes the positive equilibrium exist
        let b = (a * d + extra).sqrt();
        let c = (a * d + extra) / b + 0.1;
        let loss = NonlinearitySpec::new(1.0, p);
        let params = ModelParams { d1, d2, a, b, c, d, mu, rho, f_spec: loss, g_spec: loss };
        let init = make_initial_preset(h0, amp_u, amp_v, 101).unwrap();
        let traj = run(&params, &init, &settings(100, 0.01, 3.0), None).unwrap();
        assert_physical(&traj);
    }
}
