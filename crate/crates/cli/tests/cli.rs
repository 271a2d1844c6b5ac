use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

/// First computed distance between the shipped localized states.
const PINNED_DISTANCE: f64 = 0.1663694363608866;

fn qhm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhm")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn small_config(dir: &Path, edit: impl FnOnce(&mut Value)) -> PathBuf {
    let mut cfg: Value = serde_json::from_str(&std::fs::read_to_string(fixture("default_config.json")).unwrap()).unwrap();
    cfg["trunc"] = serde_json::json!({ "P": 2, "Nx": 8, "Ny": 8, "Q": 8 });
    edit(&mut cfg);
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn identity_fixture_has_unit_norm() {
    let out = qhm(&["norm", "--element", s(&fixture("identity.json")), "--kind", "supsum"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["sup_sum"].as_f64().unwrap(), 1.0);
    let out = qhm(&["norm", "--element", s(&fixture("identity.json")), "--kind", "lip"]);
    assert_eq!(stdout_json(&out)["value"].as_f64().unwrap(), 0.0);
}

#[test]
fn distance_between_localized_fixtures_matches_pinned_value() {
    let dir = tempfile::tempdir().unwrap();
    let witness = dir.path().join("witness.json");
    let out = qhm(&[
        "distance",
        "--mu",
        s(&fixture("mu_localized.json")),
        "--nu",
        s(&fixture("nu_localized.json")),
        "--witness",
        s(&witness),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    let bound = v["bound"].as_f64().unwrap();
    assert!((bound - PINNED_DISTANCE).abs() <= 1e-3, "bound {bound}");
    assert_eq!(v["witness_file"].as_str().unwrap(), s(&witness));
    for key in ["states", "iterations", "stagnated"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    let lip = qhm(&["norm", "--element", s(&witness), "--kind", "lip"]);
    assert!(stdout_json(&lip)["value"].as_f64().unwrap() <= 1.0 + 1e-9);
}

#[test]
fn malformed_inputs_give_exit_2_and_an_error_object() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    for args in [
        vec!["verify", "--config", s(&bad)],
        vec!["norm", "--element", s(&bad)],
        vec!["distance", "--mu", s(&bad), "--nu", s(&bad)],
        vec!["export", "--report", s(&bad)],
    ] {
        let out = qhm(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err: Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON error object");
        assert_eq!(err["error"]["exit_code"], 2);
        assert!(!err["error"]["message"].as_str().unwrap().is_empty());
    }
    let cfg = small_config(dir.path(), |c| c["tolerances"]["twist"] = (-1.0).into());
    let out = qhm(&["verify", "--config", s(&cfg), "--criterion", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let no_restarts = qhm(&[
        "distance",
        "--mu",
        s(&fixture("mu_localized.json")),
        "--nu",
        s(&fixture("nu_localized.json")),
        "--restarts",
        "0",
    ]);
    assert_eq!(no_restarts.status.code(), Some(2));
}

#[test]
fn failing_property_gives_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |c| c["tolerances"]["star_oracle"] = 1e-300.into());
    let out = qhm(&["verify", "--config", s(&cfg), "--criterion", "4"]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["passed"], false);
    assert!(report["properties"].as_array().unwrap().iter().any(|p| p["passed"] == false));
}

#[test]
fn verify_reports_are_deterministic_and_export_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let args = ["verify", "--config", s(&cfg), "--suite", "algebra", "--criterion", "4", "--criterion", "10"];
    let first = qhm(&args);
    let second = qhm(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stdout));
    assert_eq!(first.stdout, second.stdout);

    let report = dir.path().join("report.json");
    std::fs::write(&report, &first.stdout).unwrap();
    let csv = qhm(&["export", "--report", s(&report), "--format", "csv"]);
    assert!(csv.status.success());
    let text = String::from_utf8(csv.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("criterion,name,suite,passed"));
    let n = stdout_json(&first)["properties"].as_array().unwrap().len();
    assert_eq!(lines.len(), n + 1);
}

#[test]
fn gen_star_and_norm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let (a, b, ab) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("ab.json"));
    for (seed, path) in [("1", &a), ("2", &b)] {
        let out = qhm(&["gen", "--seed", seed, "--decay", "1.0", "--out", s(path), "--config", s(&cfg)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let again = dir.path().join("a2.json");
    qhm(&["gen", "--seed", "1", "--decay", "1.0", "--out", s(&again), "--config", s(&cfg)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&again).unwrap());

    let out = qhm(&["star", "--a", s(&a), "--b", s(&identity_like(dir.path())), "--out", s(&ab)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let na = stdout_json(&qhm(&["norm", "--element", s(&a)]))["sup_sum"].as_f64().unwrap();
    let nab = stdout_json(&qhm(&["norm", "--element", s(&ab)]))["sup_sum"].as_f64().unwrap();
    assert!((na - nab).abs() < 1e-12, "{na} vs {nab}");

    let prod = dir.path().join("prod.json");
    assert!(qhm(&["star", "--a", s(&a), "--b", s(&b), "--out", s(&prod)]).status.success());
    let nb = stdout_json(&qhm(&["norm", "--element", s(&b)]))["sup_sum"].as_f64().unwrap();
    let np = stdout_json(&qhm(&["norm", "--element", s(&prod)]))["sup_sum"].as_f64().unwrap();
    assert!(np <= na * nb + 1e-9);

    let cstar = qhm(&["norm", "--element", s(&a), "--kind", "cstar"]);
    assert!(stdout_json(&cstar)["value"].as_f64().unwrap() <= na + 1e-6);
}

/// The identity at the small configuration's model and grid.
fn identity_like(dir: &Path) -> PathBuf {
    let data: Vec<Vec<Vec<[f64; 2]>>> =
        (-2..=2).map(|p| vec![vec![[if p == 0 { 1.0 } else { 0.0 }, 0.0]; 8]; 8]).collect();
    let v = serde_json::json!({ "c": 1, "hbar": 0.3, "mu": 0.7, "nu": 0.5, "P": 2, "Nx": 8, "Ny": 8, "Q": 8, "data": data });
    let path = dir.join("identity.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path
}
