use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectral-hom"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn beats_reports_visibility_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("beats.csv");
    let o = run(&["beats", "--eta", "0.75", "--sigma", "2.5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("visibility 0.5625"));
    let text = read(&out);
    assert_eq!(text.lines().next().unwrap(), "delta,bunch_density,coincidence_density");
    assert_eq!(text.lines().count(), 2002);
}

#[test]
fn fisher_scan_ordering() {
    let o = run(&["fisher-scan", "--sigma", "1"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis_value,fi_resolved,fi_nonresolved,fi_eta1,fi_large_delay,qfi,crb_resolved,crb_nonresolved,qcrb"
    );
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(v[1] >= v[2] - 1e-9);
        assert!(v[1] <= v[5] + 1e-9);
        rows += 1;
    }
    assert_eq!(rows, 51);
}

#[test]
fn fisher_scan_failed_points_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"scan": {"axis": "sigma_sq", "start": -1, "stop": 1, "points": 3}}"#).unwrap();
    let o = run(&["fisher-scan", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().nth(1).unwrap().contains("NaN"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.csv");
    let common = ["--delta-t", "2", "--eta", "0.75", "--seed", "3"];
    let mut args = vec!["simulate", "--n-events", "20000", "--out", events.to_str().unwrap()];
    args.extend(common);
    assert!(run(&args).status.success());
    let text = read(&events);
    assert_eq!(text.lines().next().unwrap(), "kind,channel,omega_a,omega_b");
    assert_eq!(text.lines().count(), 20001);

    let mut args = vec!["estimate", "--events", events.to_str().unwrap()];
    args.extend(common);
    let o = run(&args);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let est = v["delta_t_hat"].as_f64().unwrap();
    let se = v["stderr_crb"].as_f64().unwrap();
    assert!((est - 2.0).abs() < 5.0 * se, "{v}");

    // Estimating straight from the same seed gives the same answer, up to
    // the refinement tolerance (the CSV holds 12 digits).
    let mut args = vec!["estimate", "--n-events", "20000"];
    args.extend(common);
    let w: serde_json::Value = serde_json::from_slice(&run(&args).stdout).unwrap();
    assert!((w["delta_t_hat"].as_f64().unwrap() - est).abs() < 1e-7);
}

#[test]
fn validate_crb_json_fields() {
    let o = run(&["validate-crb", "--n-events", "1000", "--n-trials", "50", "--delta-t", "2", "--seed", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 5);
    for k in ["empirical_variance", "crb", "ratio", "bias", "n_trials"] {
        assert!(keys.contains(&k), "{k}");
    }
    assert_eq!(v["n_trials"], 50);
}

#[test]
fn oracle_check_json() {
    let o = run(&["oracle-check", "--eta", "0.75", "--delta-t", "2.5", "--grid-points", "128"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["rel_error"].as_f64().unwrap() < 1e-3, "{v}");
    assert!(v["max_abs_density_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn error_exit_codes() {
    let o = run(&["estimate", "--config", "missing.json"]);
    assert_eq!(o.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"experiment\": {\n    \"etaa\": 0.5\n  }\n}").unwrap();
    let o = run(&["beats", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&o.stderr).to_string();
    assert!(msg.contains("line 3"), "{msg}");

    assert_eq!(run(&["beats", "--eta", "1.5"]).status.code(), Some(1));
    // No two-photon event carries delay information when eta = 0.
    assert_eq!(run(&["estimate", "--eta", "0", "--n-events", "100"]).status.code(), Some(2));

    let o = bin().args(["beats"]).env("SPECTRAL_HOM_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn thread_count_does_not_change_output() {
    let args = ["validate-crb", "--n-events", "1000", "--n-trials", "50", "--delta-t", "2", "--eta", "0.75"];
    let one = bin().args(args).env("SPECTRAL_HOM_THREADS", "1").output().unwrap();
    let four = bin().args(args).env("SPECTRAL_HOM_THREADS", "4").output().unwrap();
    assert!(one.status.success() && four.status.success());
    assert_eq!(one.stdout, four.stdout);
}
