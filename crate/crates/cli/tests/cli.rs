use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delaysteer")).args(args).env_remove("DELAYSTEER_SEED").output().expect("binary runs")
}

fn run_seeded(args: &[&str], seed: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delaysteer")).args(args).env("DELAYSTEER_SEED", seed).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_identity_delay() {
    let sys = fixture("identity_delay.json");
    let out = run(&["analyze", "--system", path_str(&sys), "--window=-3,3,-3,3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["complete"], true);
    assert_eq!(v["spectrally_controllable_in_window"], false);
    assert_eq!(v["spectral_witness"]["rank"], 1);
    assert!((v["spectral_witness"]["re"].as_f64().unwrap() - 0.567143290409784).abs() < 1e-9);
}

#[test]
fn analyze_incomplete_pencil() {
    let sys = fixture("incomplete_pencil.json");
    let out = run(&["analyze", "--system", path_str(&sys)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["complete"], false);
    assert_eq!(v["completable"], false);
    assert_eq!(v["spectrally_controllable_in_window"], true);
    assert_eq!(v["pair_A1_b_controllable"], false);
    assert_eq!(v["exactly_null_controllable"], "undetermined");
}

#[test]
fn synthesize_with_horizon_equal_to_dimension_fails() {
    let (sys, state) = (fixture("diag12.json"), fixture("unit_state_2.json"));
    let out = run(&["synthesize", "--system", path_str(&sys), "--state", path_str(&state), "--horizon", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("HorizonTooShort"), "{}", stderr(&out));
}

#[test]
fn uncontrollable_pair_is_a_domain_error() {
    let (sys, state) = (fixture("identity_delay.json"), fixture("unit_state_2.json"));
    let out = run(&["synthesize", "--system", path_str(&sys), "--state", path_str(&state), "--horizon", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("NotControllablePair"), "{}", stderr(&out));
}

#[test]
fn full_pipeline_on_scalar_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (sys, state) = (fixture("scalar.json"), fixture("unit_state_1.json"));
    let control = dir.path().join("control.json");
    let traj = dir.path().join("traj.csv");

    let out = run(&[
        "synthesize",
        "--system",
        path_str(&sys),
        "--state",
        path_str(&state),
        "--horizon",
        "3",
        "--truncation",
        "21",
        "--out",
        path_str(&control),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(&control).unwrap()).unwrap();
    assert_eq!(meta["run"]["truncation"], 21);
    assert_eq!(meta["eigenvalues"].as_array().unwrap().len(), 21);
    assert!(meta["residual"].as_f64().unwrap() < 1e-6);

    let out = run(&[
        "simulate",
        "--system",
        path_str(&sys),
        "--state",
        path_str(&state),
        "--control",
        path_str(&control),
        "--dt",
        "1/512",
        "--format",
        "csv",
        "--out",
        path_str(&traj),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.meta.json")).unwrap()).unwrap();
    assert!(summary["terminal_residual"].as_f64().unwrap() <= 1e-3);

    let out = run(&["verify", "--trajectory", path_str(&traj), "--horizon", "3", "--tol", "1e-3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["is_null"], true);
    assert!(v["residual"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn sampled_control_csv_drives_the_simulator() {
    let dir = tempfile::tempdir().unwrap();
    let (sys, state) = (fixture("scalar.json"), fixture("unit_state_1.json"));
    let control = dir.path().join("u.csv");
    let out = run(&[
        "synthesize",
        "--system",
        path_str(&sys),
        "--state",
        path_str(&state),
        "--horizon",
        "3",
        "--format",
        "csv",
        "--out",
        path_str(&control),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&control).unwrap();
    assert!(text.starts_with("t,u\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 512 + 1);
    assert!(dir.path().join("u.meta.json").exists());

    let out = run(&["simulate", "--system", path_str(&sys), "--state", path_str(&state), "--control", path_str(&control)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(json(&out)["terminal_residual"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn verify_rejects_uncontrolled_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let (sys, state) = (fixture("scalar.json"), fixture("unit_state_1.json"));
    let traj = dir.path().join("free.csv");
    let out = run(&[
        "simulate",
        "--system",
        path_str(&sys),
        "--state",
        path_str(&state),
        "--horizon",
        "3",
        "--dt",
        "1/64",
        "--format",
        "csv",
        "--out",
        path_str(&traj),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = run(&["verify", "--trajectory", path_str(&traj), "--horizon", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["is_null"], false);

    let out = run(&["verify", "--trajectory", path_str(&traj), "--horizon", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("HorizonShort"), "{}", stderr(&out));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let sys = fixture("incomplete_pencil.json");
    let args = ["analyze", "--system", path_str(&sys), "--window=-3,3,-3,3"];
    let a = run_seeded(&args, "7");
    let b = run_seeded(&args, "7");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["run"]["seed"], 7);

    let (sys, state) = (fixture("diag12.json"), fixture("unit_state_2.json"));
    let args = ["synthesize", "--system", path_str(&sys), "--state", path_str(&state), "--horizon", "4", "--truncation", "5"];
    let a = run_seeded(&args, "3");
    let b = run_seeded(&args, "3");
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn reports_echo_settings() {
    let (sys, state) = (fixture("scalar.json"), fixture("unit_state_1.json"));
    let out =
        run(&["synthesize", "--system", path_str(&sys), "--state", path_str(&state), "--horizon", "3", "--truncation", "11"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let run_info = &json(&out)["run"];
    assert_eq!(run_info["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(run_info["truncation"], 11);
    assert_eq!(run_info["grid"]["steps_per_unit"], 512);
    assert!(run_info["window"]["re_min"].is_number());
    assert!(run_info["tolerances"]["gram_cutoff"].is_number());
}

#[test]
fn spectrum_csv_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let sys = fixture("diag12.json");
    let out_path = dir.path().join("eig.csv");
    let out =
        run(&["spectrum", "--system", path_str(&sys), "--window=-4,3,-20,20", "--format", "csv", "--out", path_str(&out_path)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("eig.meta.json")).unwrap()).unwrap();
    let count = meta["eigenvalues"].as_array().unwrap().len();
    assert!(count >= 2);
    assert_eq!(text.lines().count(), count + 1);
    assert_eq!(meta["zero_count"].as_u64().unwrap() as usize, count);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{ \"n\": 2, \"A1\": [1, 2, 3], \"b\": [0, 1] }").unwrap();
    let truncated = dir.path().join("truncated.json");
    std::fs::write(&truncated, "{ \"n\": 1, ").unwrap();
    let scalar = fixture("scalar.json");
    let state2 = fixture("unit_state_2.json");

    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["analyze", "--system", "/nonexistent/system.json"], "cannot read"),
        (vec!["analyze", "--system", path_str(&bad_json)], "A1"),
        (vec!["analyze", "--system", path_str(&truncated)], "system file"),
        (vec!["analyze", "--system", path_str(&scalar), "--window", "1,2,3"], "window"),
        (vec!["synthesize", "--system", path_str(&scalar), "--state", path_str(&state2), "--horizon", "3"], "state y"),
        (vec!["simulate", "--system", path_str(&scalar), "--state", path_str(&state2)], "state y"),
        (vec!["analyze", "--system", path_str(&scalar), "--format", "csv"], "JSON only"),
    ];
    for (args, needle) in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{args:?}: {}", stderr(&out));
    }
    let out = run_seeded(&["analyze", "--system", path_str(&scalar)], "not-a-number");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("DELAYSTEER_SEED"));
}

#[test]
fn simulate_needs_a_horizon_without_control() {
    let (sys, state) = (fixture("scalar.json"), fixture("unit_state_1.json"));
    let out = run(&["simulate", "--system", path_str(&sys), "--state", path_str(&state)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", "--system", path_str(&sys), "--state", path_str(&state), "--horizon", "1", "--dt", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("IncompatibleGrid"), "{}", stderr(&out));
}

#[test]
fn kernel_fixture_parses_and_analyzes() {
    let sys = fixture("kernel_example.json");
    let out = run(&["spectrum", "--system", path_str(&sys)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["zero_count"].as_u64().unwrap() as usize, v["eigenvalues"].as_array().unwrap().len());
}
