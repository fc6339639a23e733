use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_cascade-sim");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    std::fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

const SMALL: &str = r#"{
    "scenario": "lambda_basic",
    "params": {"eta": 0.8},
    "integrator": {"dt": 0.01, "t_end": 60},
    "ensemble": {"n_traj": 40, "master_seed": 9},
    "sweep": {"path": "params.gamma32_T", "values": [0.5, 1.0]},
    "outputs": {"csv": "out.csv", "json": "out.json", "svg": "out.svg"}
}"#;

#[test]
fn bad_configs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        r#"{"params": {"gamma32_T": -1}}"#,
        r#"{"unknown": 1}"#,
        r#"{"sweep": {"path": "params.nope", "values": [1]}}"#,
        r#"{"sweep": {"path": "params.eta", "values": [2.0]}}"#,
        "not json",
    ];
    for (k, body) in cases.iter().enumerate() {
        let name = write_config(dir.path(), &format!("c{k}.json"), body);
        let out = run(dir.path(), &["run", "--config", &name]);
        assert_eq!(code(&out), 2, "{body}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let negative = String::from_utf8(run(dir.path(), &["run", "--config", "c0.json"]).stderr).unwrap();
    assert!(negative.contains("params.gamma32_T"), "{negative}");

    assert_eq!(code(&run(dir.path(), &["run", "--config", "missing.json"])), 2);
    assert_eq!(code(&run(dir.path(), &["jitter", "--engine", "all"])), 2);
    assert_eq!(code(&run(dir.path(), &["jitter", "--n-traj", "0", "--print-config"])), 2);
    assert_eq!(code(&run(dir.path(), &["frobnicate"])), 2);
}

#[test]
fn numerical_failure_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let name = write_config(
        dir.path(),
        "blowup.json",
        r#"{"params": {"gamma31_S": 1e6}, "integrator": {"dt": 1, "t_end": 50}, "engine": "mcwf", "ensemble": {"n_traj": 2}}"#,
    );
    let out = run(dir.path(), &["run", "--config", &name]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("instability"));
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let name = write_config(dir.path(), "small.json", SMALL);
    for out_dir in ["a", "b"] {
        let out = run(dir.path(), &["run", "--config", &name, "--out-dir", out_dir]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["out.csv", "out_timeseries.csv", "out.svg"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        assert!(a == b, "{file} differs between runs");
    }
    let csv = std::fs::read_to_string(dir.path().join("a/out.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "sweep_param,sweep_value,engine,observable,mean,stderr,n_traj,seed");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.iter().all(|r| r.len() == 8 && r[0] == "params.gamma32_T"));
    assert!(rows.iter().any(|r| r[1] == "0.5" && r[2] == "oracle" && r[3] == "absorbed"));
    assert!(rows.iter().any(|r| r[1] == "1.0" && r[2] == "mcwf" && r[3] == "absorbed" && r[6] == "40" && r[7] == "9"));

    // a different seed changes the trajectory rows
    let out = run(dir.path(), &["run", "--config", &name, "--out-dir", "c", "--seed", "10"]);
    assert_eq!(code(&out), 0);
    let other = std::fs::read_to_string(dir.path().join("c/out.csv")).unwrap();
    assert_ne!(csv, other);
}

#[test]
fn summary_echoes_a_valid_config() {
    let dir = tempfile::tempdir().unwrap();
    let name = write_config(dir.path(), "small.json", SMALL);
    let out = run(dir.path(), &["run", "--config", &name, "--engine", "oracle"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out.json")).unwrap()).unwrap();
    assert!(summary["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert!(summary["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
    assert_eq!(summary["config"]["engine"], "oracle");
    assert_eq!(summary["points"].as_array().unwrap().len(), 2);
    assert_eq!(summary["analysis"]["observable"], "absorbed");

    // the echo is itself a runnable config that reproduces the table
    let echo = write_config(dir.path(), "echo.json", &summary["config"].to_string());
    let again = run(dir.path(), &["run", "--config", &echo, "--out-dir", "echo"]);
    assert_eq!(code(&again), 0);
    assert_eq!(
        std::fs::read(dir.path().join("out.csv")).unwrap(),
        std::fs::read(dir.path().join("echo/out.csv")).unwrap()
    );
}

#[test]
fn presets_print_their_configs() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, scenario) in [
        ("sweep-ratio", "lambda_basic"),
        ("sweep-eta", "lambda_basic"),
        ("jitter", "lambda_jitter"),
        ("entangle", "polarization_entanglement"),
        ("obe", "coherent_obe"),
    ] {
        let out = run(dir.path(), &[cmd, "--print-config", "--seed", "5"]);
        assert_eq!(code(&out), 0);
        let config: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(config["scenario"], scenario);
        assert_eq!(config["ensemble"]["master_seed"], 5);
    }
    let ratio: serde_json::Value =
        serde_json::from_slice(&run(dir.path(), &["sweep-ratio", "--print-config"]).stdout).unwrap();
    assert_eq!(ratio["sweep"]["values"], serde_json::json!([0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0]));
}

#[test]
fn obe_preset_runs_without_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["obe", "--engine", "oracle"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("obe.csv")).unwrap();
    assert!(csv.contains("params.gamma32,1.0,closed_form,output_flux_rel,0.0,0.0,0,0"));
    assert!(dir.path().join("obe.svg").exists());
}
