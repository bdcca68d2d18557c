use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn reference() -> Value {
    serde_json::from_str(&fs::read_to_string(configs().join("reference_spreading.json")).unwrap()).unwrap()
}

fn coopfront(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coopfront")).args(args).output().unwrap()
}

fn write_config(dir: &TempDir, name: &str, value: &Value) -> String {
    let path = dir.path().join(name);
    fs::write(&path, serde_json::to_string(value).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("error JSON on stderr")
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn reference_simulation_writes_artifacts() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("reference_spreading.json");
    let out = tmp.path().join("run");
    let res = coopfront(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,g,h,gprime,hprime,max_u,max_v,profile_err_left,profile_err_right"
    );
    assert_eq!(read_json(out.join("verdict.json"))["kind"], "Spreading");
    for name in ["manifest.json", "spectral.json", "semiwave.csv", "snapshot_000.csv", "summary.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
}

#[test]
fn non_cooperative_parameters_exit_with_validation_code() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = reference();
    cfg["params"]["b"] = json!(0.5);
    cfg["params"]["c"] = json!(0.5);
    let path = write_config(&tmp, "bad.json", &cfg);
    let out = tmp.path().join("out");
    let res = coopfront(&["simulate", "--config", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let err = stderr_json(&res);
    assert_eq!(err["error"]["kind"], "validation");
    assert!(err["error"]["message"].as_str().unwrap().contains("bc−ad ≤ 0"));
    assert_eq!(read_json(out.join("error.json")), err);
}

#[test]
fn zero_time_step_is_a_field_level_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = reference();
    cfg["numerics"]["dt"] = json!(0.0);
    let path = write_config(&tmp, "dt0.json", &cfg);
    let res = coopfront(&["validate", "--config", &path]);
    assert_eq!(res.status.code(), Some(3));
    assert!(stderr_json(&res)["error"]["message"].as_str().unwrap().contains("numerics.dt"));
}

#[test]
fn malformed_config_is_a_parse_error() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("broken.json");
    fs::write(&path, "{\"params\": ").unwrap();
    let res = coopfront(&["equilibrium", "--config", path.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(stderr_json(&res)["error"]["kind"], "parse");

    let mut cfg = reference();
    cfg["numerics"]["typo_field"] = json!(1);
    let path = write_config(&tmp, "typo.json", &cfg);
    assert_eq!(coopfront(&["validate", "--config", &path]).status.code(), Some(2));
    assert_eq!(coopfront(&["speed"]).status.code(), Some(2));
}

#[test]
fn stalled_solver_is_a_numerical_error() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = reference();
    cfg["numerics"]["semiwave"] = json!({ "method": "relaxation", "t_relax": 1.0 });
    let path = write_config(&tmp, "stall.json", &cfg);
    let res = coopfront(&["semiwave", "--config", &path, "--speed", "0.5"]);
    assert_eq!(res.status.code(), Some(4), "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(stderr_json(&res)["error"]["kind"], "numerical");
}

#[test]
fn small_commands_print_json() {
    let cfg = configs().join("reference_spreading.json");
    let cfg = cfg.to_str().unwrap();
    let eq: Value = serde_json::from_slice(&coopfront(&["equilibrium", "--config", cfg]).stdout).unwrap();
    assert!((eq["u_star"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let sp: Value =
        serde_json::from_slice(&coopfront(&["spectral", "--config", cfg, "--speed", "0"]).stdout).unwrap();
    assert!((sp["s_star"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((sp["mu_hat1"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let sw: Value =
        serde_json::from_slice(&coopfront(&["semiwave", "--config", cfg, "--speed", "0"]).stdout).unwrap();
    assert!((sw["dphi0"].as_f64().unwrap() - (1.0f64 / 3.0).sqrt()).abs() < 1e-3);
}

fn sweep(tmp: &TempDir, name: &str, axes: Value, format: &str) -> (Output, PathBuf) {
    let cfg = json!({ "base": reference(), "axes": axes, "max_parallel": 3 });
    let path = write_config(tmp, &format!("{name}.json"), &cfg);
    let out = tmp.path().join(name);
    let res = coopfront(&["sweep", "--config", &path, "--out", out.to_str().unwrap(), "--format", format]);
    (res, out)
}

fn sweep_speeds(out: &Path) -> Vec<f64> {
    let rows = read_json(out.join("sweep.json"));
    rows.as_array()
        .unwrap()
        .iter()
        .map(|r| r["summary"]["s_mu_rho"].as_f64().unwrap())
        .collect()
}

#[test]
fn speed_increases_with_mu_across_a_sweep() {
    let tmp = TempDir::new().unwrap();
    let (res, out) = sweep(&tmp, "mu", json!([{ "path": "/params/mu", "values": [0.25, 0.5, 1.0, 2.0] }]), "json");
    assert_eq!(res.status.code(), Some(0));
    let s = sweep_speeds(&out);
    assert_eq!(s.len(), 4);
    assert!(s.windows(2).all(|w| w[1] > w[0]), "{s:?}");
}

#[test]
fn species_weight_raises_the_speed() {
    let tmp = TempDir::new().unwrap();
    let (res, out) = sweep(&tmp, "rho", json!([{ "path": "/params/rho", "values": [0.0, 1.0] }]), "json");
    assert_eq!(res.status.code(), Some(0));
    let s = sweep_speeds(&out);
    assert!(s[0] < s[1], "{s:?}");
}

#[test]
fn empty_axes_reproduce_a_single_simulation() {
    let tmp = TempDir::new().unwrap();
    let (res, out) = sweep(&tmp, "empty", json!([]), "json");
    assert_eq!(res.status.code(), Some(0));
    let rows = read_json(out.join("sweep.json"));
    assert_eq!(rows.as_array().unwrap().len(), 1);

    let cfg = configs().join("reference_spreading.json");
    let single = tmp.path().join("single");
    coopfront(&["simulate", "--config", cfg.to_str().unwrap(), "--out", single.to_str().unwrap()]);
    assert_eq!(rows[0]["summary"], read_json(single.join("summary.json")));
}

#[test]
fn sweep_rows_follow_grid_order_and_record_failures() {
    let tmp = TempDir::new().unwrap();
    let axes = json!([
        { "path": "/params/b", "values": [2.0, 0.5] },
        { "path": "/params/mu", "values": [1.0, 2.0] }
    ]);
    let (res, out) = sweep(&tmp, "grid", axes, "csv");
    assert_eq!(res.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "index,/params/b,/params/mu,s_star,l_star,s_mu_rho,verdict,s_hat,h_star_hat,error");
    assert!(lines[1].starts_with("0,2.0,1.0,"));
    assert!(lines[2].starts_with("1,2.0,2.0,"));
    assert!(lines[3].starts_with("2,0.5,1.0,") && lines[3].contains("bc−ad ≤ 0"));
    assert!(lines[4].starts_with("3,0.5,2.0,") && lines[4].contains("bc−ad ≤ 0"));
}

#[test]
fn unknown_sweep_axis_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let (res, _) = sweep(&tmp, "bad", json!([{ "path": "/params/zeta", "values": [1.0] }]), "csv");
    assert_eq!(res.status.code(), Some(3));
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical_and_manifest_replays() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("reference_spreading.json");
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for dir in [&a, &b] {
        let res = coopfront(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0));
    }
    assert_eq!(dir_bytes(&a), dir_bytes(&b));

    let manifest = a.join("manifest.json");
    let res = coopfront(&["simulate", "--config", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    assert_eq!(dir_bytes(&a), dir_bytes(&c));
}

#[test]
fn json_format_switches_tables() {
    let tmp = TempDir::new().unwrap();
    let cfg = configs().join("reference_vanishing.json");
    let out = tmp.path().join("v");
    let res = coopfront(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"]);
    assert_eq!(res.status.code(), Some(0));
    let traj = read_json(out.join("trajectory.json"));
    assert!(traj.as_array().unwrap().len() > 100);
    assert!(!out.join("trajectory.csv").exists());
    assert_eq!(read_json(out.join("verdict.json"))["kind"], "Vanishing");
    assert_eq!(read_json(out.join("fit.json")), Value::Null);
}

#[test]
fn reproduce_recipes_pass_on_the_reference_instance() {
    let tmp = TempDir::new().unwrap();
    for recipe in ["dichotomy", "speed", "sharp_profile"] {
        let out = tmp.path().join(recipe);
        let res = coopfront(&["reproduce", recipe, "--out", out.to_str().unwrap()]);
        assert_eq!(res.status.code(), Some(0), "{recipe}: {}", String::from_utf8_lossy(&res.stdout));
        let report = read_json(out.join("report.json"));
        assert_eq!(report["pass"], true);
        assert_eq!(report["recipe"], recipe);
        assert!(!report["checks"].as_array().unwrap().is_empty());
    }
    assert_eq!(coopfront(&["reproduce", "unknown"]).status.code(), Some(2));
}
