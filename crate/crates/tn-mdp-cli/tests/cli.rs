//! End-to-end tests of the `tn-mdp` binary: exit codes, config-file layering
//! and artifact contents.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tn-mdp")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tn-mdp-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("run binary")
}

#[test]
fn sarl_walk_writes_all_artifacts() {
    let out = scratch("artifacts");
    let res = run(&["sarl-walk", "--T", "6", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["manifest.json", "summary.json", "trajectories.csv", "policy.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    // stdout carries the same summary that lands in summary.json.
    let stdout: serde_json::Value =
        serde_json::from_slice(&res.stdout).expect("summary on stdout");
    let file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(stdout, file);
    assert_eq!(file["experiment"], "sarl-walk");
    assert!((file["total_probability"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn trajectories_csv_is_well_formed() {
    let out = scratch("csv");
    let res = run(&[
        "sarl-walk", "--T", "4", "--seed", "1", "--n-sample", "5",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let body = std::fs::read_to_string(out.join("trajectories.csv")).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("traj_id,agent,t,s,a,r"));
    // 5 trajectories x 1 agent x (1 initial row + 4 steps).
    assert_eq!(lines.count(), 5 * 5);
    // The t=0 rows have empty action and reward fields.
    assert!(body.lines().any(|l| l.starts_with("0,1,0,") && l.ends_with(",,")));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn invalid_chi_range_exits_with_config_code() {
    let out = scratch("badchi");
    let res = run(&["svd-scan", "--chi", "5..2", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("invalid config"));
}

#[test]
fn zero_horizon_exits_with_config_code() {
    let out = scratch("badt");
    let res = run(&["sarl-walk", "--T", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_with_io_code() {
    let res = run(&["sarl-walk", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("i/o failure"));
}

#[test]
fn malformed_config_file_exits_with_config_code() {
    let out = scratch("badjson");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("cfg.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let res = run(&["sarl-walk", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn flags_override_config_file_values() {
    let out = scratch("layered");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("cfg.json");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "experiment": "sarl-walk",
            "walker": {"horizon": 4, "sigma": 0.0, "n_agents": 1, "seed": 9},
            "n_sample": 7,
            "output_dir": out.join("from-file"),
        })
        .to_string(),
    )
    .unwrap();
    // --T overrides the file's horizon; seed and n_sample come from the file.
    let res = run(&[
        "sarl-walk", "--config", cfg.to_str().unwrap(), "--T", "6",
        "--out", out.join("run").to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["walker"]["horizon"], 6);
    assert_eq!(manifest["config"]["walker"]["seed"], 9);
    assert_eq!(manifest["config"]["n_sample"], 7);
    assert_eq!(manifest["seed"], 9);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn plan_csv_has_epoch_zero_baseline() {
    let out = scratch("plan");
    let res = run(&[
        "plan", "--T", "6", "--seed", "2", "--epochs", "2",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let body = std::fs::read_to_string(out.join("plan.csv")).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("epoch,e_model,e_true"));
    let first = lines.next().unwrap();
    assert!(first.starts_with("0,"), "first data row is the epoch-0 baseline");
    assert_eq!(body.lines().count(), 1 + 3); // header + epochs 0..=2
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn svd_scan_csv_matches_requested_range() {
    let out = scratch("svd");
    let res = run(&[
        "svd-scan", "--T", "3", "--chi", "2..6", "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let body = std::fs::read_to_string(out.join("svd.csv")).unwrap();
    let chis: Vec<usize> = body
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(chis, vec![2, 3, 4, 5, 6]);
    let _ = std::fs::remove_dir_all(&out);
}
