use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn oamring(args: &[&str], out: &Path) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_oamring"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn every_output_carries_the_manifest_hash() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(oamring(&["rate", "--preset", "fig3", "--set", "rate.tau_end=20"], dir.path()), 0);
    let manifest = json(&dir.path().join("manifest.json"));
    let hash = manifest["manifest_hash"].as_str().unwrap();
    for name in manifest["outputs"].as_array().unwrap() {
        let text = std::fs::read_to_string(dir.path().join(name.as_str().unwrap())).unwrap();
        assert!(text.contains(hash), "{name} lacks the hash");
    }
    assert_eq!(manifest["preset"], "fig3");
    assert_eq!(manifest["config"]["pinned"][0], "params.epsilon");
}

#[test]
fn preset_override_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["potential", "--preset", "fig2", "--set", "params.epsilon=0.2"];
    assert_eq!(oamring(&args, dir.path()), 0);
    let manifest = json(&dir.path().join("manifest.json"));
    let o = &manifest["config"]["overrides"][0];
    assert_eq!(o["key"], "params.epsilon");
    assert_eq!(o["preset_value"], "0.1");
    assert_eq!(o["value"], "0.2");
    assert_eq!(o["source"], "command-line");
    assert!(manifest["config"]["pinned"].as_array().unwrap().is_empty());
}

#[test]
fn config_file_sits_between_preset_and_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "[params]\ngamma = 0.3\nk0_rho = 2\n\n[potential]\nsamples = 16\n").unwrap();
    let config = config.to_string_lossy().into_owned();
    let args = ["potential", "--preset", "fig2", "--config", &config, "--set", "params.k0_rho=3"];
    assert_eq!(oamring(&args, dir.path()), 0);
    let entries = json(&dir.path().join("manifest.json"))["config"]["entries"].clone();
    let find = |key: &str| entries.as_array().unwrap().iter().find(|e| e["key"] == key).unwrap().clone();
    assert_eq!((find("params.gamma")["value"].clone(), find("params.gamma")["source"].clone()), ("0.3".into(), "config".into()));
    assert_eq!(find("params.k0_rho")["source"], "command-line");
    assert_eq!(find("params.ell")["source"], "preset");
    assert_eq!(find("ode.rel_tol")["source"], "default");
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(oamring(&["rate", "--set", "params.gamma=-0.1"], dir.path()), 2);
    let record = json(&dir.path().join("error.json"));
    assert_eq!(record["kind"], "configuration");
    assert!(record["message"].as_str().unwrap().contains("params.gamma"));
    assert_eq!(oamring(&["rate", "--set", "rate.speed=1"], dir.path()), 2);
    assert_eq!(oamring(&["radiate"], dir.path()), 2);
    assert_eq!(oamring(&["evolve", "--preset", "fig9"], dir.path()), 2);
}

#[test]
fn tolerance_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["evolve", "--preset", "fig2", "--set", "ode.rel_tol=1e-2", "--set", "ode.abs_tol=1e-2", "--set", "evolve.tau_end=1000"];
    assert_eq!(oamring(&args, dir.path()), 3);
    let record = json(&dir.path().join("error.json"));
    assert_eq!(record["kind"], "numerical");
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn truncation_failure_exits_with_4() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["evolve", "--preset", "fig4", "--set", "params.m_max=4", "--set", "evolve.tau_end=600"];
    assert_eq!(oamring(&args, dir.path()), 4);
    let record = json(&dir.path().join("error.json"));
    assert_eq!(record["kind"], "truncation");
    assert!(record["message"].as_str().unwrap().contains("m_max"));
}

#[test]
fn success_clears_a_stale_error_record() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(oamring(&["potential", "--set", "params.k0_rho=0"], dir.path()), 2);
    assert!(dir.path().join("error.json").exists());
    assert_eq!(oamring(&["potential"], dir.path()), 0);
    assert!(!dir.path().join("error.json").exists());
}

#[test]
fn radiate_accepts_an_explicit_bunching_list() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "radiate",
        "--preset",
        "fig4",
        "--set",
        "radiate.bunching=0:1:0, 5:0.5:0",
        "--set",
        "radiate.theta_count=19",
        "--set",
        "radiate.phi_count=32",
    ];
    assert_eq!(oamring(&args, dir.path()), 0);
    let summary = json(&dir.path().join("radiation_summary.json"));
    assert_eq!(summary["equator"]["components"][0]["ell_prime"], -3);
    let grid = std::fs::read_to_string(dir.path().join("radiation_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2 + 19 * 32);
}

#[test]
fn rate_single_channel_adds_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["rate", "--preset", "fig3", "--set", "rate.channel=6", "--set", "rate.tau_end=200"];
    assert_eq!(oamring(&args, dir.path()), 0);
    let csv = std::fs::read_to_string(dir.path().join("rate.csv")).unwrap();
    let header: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let (i0, i6) = (header.iter().position(|h| *h == "N_0").unwrap(), header.iter().position(|h| *h == "N_6").unwrap());
    let (a0, a6) = (header.len() - 2, header.len() - 1);
    assert_eq!(header[a6], "analytic_N_6");
    for line in csv.lines().skip(2) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[i0] - v[a0]).abs() < 1e-6 && (v[i6] - v[a6]).abs() < 1e-6);
    }
}
