use std::path::Path;
use std::process::Command;

fn ope(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ope")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn oracle_command_prints_exact_values() {
    let out = ope(&["oracle", "model-win", "--horizon", "50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((value - 3.0).abs() < 1e-9, "{text}");
}

#[test]
fn bad_inputs_exit_with_config_code() {
    assert_eq!(ope(&["oracle", "no-such-env"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        write(dir.path(), "bad.json", r#"{"environment": {"id": "model-win"}, "estimators": ["nope"], "n_grid": [8], "horizons": [4]}"#);
    let out = ope(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    let mdp =
        write(dir.path(), "m.json", "{\"S\": 1, \"A\": 1, \"H\": 1, \"d1\": [1.0],\n\"T\": [[[[0.5]]]], \"r\": [[[[0.0]]]], \"R_max\": 1}");
    assert_eq!(ope(&["validate", &mdp]).status.code(), Some(2));
}

#[test]
fn run_writes_results_and_flags_attrition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ok.json",
        r#"{"environment": {"id": "model-win"}, "estimators": ["is", "mis"], "n_grid": [16], "horizons": [4], "replications": 3, "seed": 5}"#,
    );
    let out_dir = dir.path().join("out");
    let out = ope(&["run", &cfg, "--out", out_dir.to_str().unwrap(), "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert!(csv.starts_with("env,estimator,n,H,seed,estimate,oracle,clipped,wall_ms\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);

    let failing = write(
        dir.path(),
        "fail.json",
        r#"{"environment": {"id": "time-varying-chain"}, "estimators": ["dm"], "n_grid": [16], "horizons": [8], "replications": 2}"#,
    );
    let out = ope(&["run", &failing, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
