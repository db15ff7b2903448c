use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_z2frames"))
        .arg("--config")
        .arg(&path)
        .args(extra)
        .env_remove("Z2FRAMES_OUT")
        .output()
        .unwrap()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn chern_run_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = r#"{"schema": 1, "command": "chern", "model": {"kind": "haldane", "mass": 0.2}}"#;
    let status = run(dir.path(), config, &["--out", out.to_str().unwrap()]);
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let doc = report(&out.join("chern.json"));
    let record = &doc["records"][0];
    assert_eq!(record["outcome"], "ok");
    assert_eq!(record["chern"].as_i64().unwrap().abs(), 1);
    assert!(String::from_utf8_lossy(&status.stderr).contains("record(s) in"));
}

#[test]
fn incompatible_split_exits_with_obstruction() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"schema": 1, "command": "split", "model": {"kind": "kane_mele"}, "h": 0}"#;
    let status = run(dir.path(), config, &["--out", dir.path().to_str().unwrap()]);
    assert_eq!(status.status.code(), Some(2));
    let doc = report(&dir.path().join("split.json"));
    assert_eq!(doc["records"][0]["outcome"], "obstruction");
}

#[test]
fn split_writes_its_frame() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"schema": 1, "command": "split", "model": {"kind": "kane_mele"}}"#;
    let status = run(dir.path(), config, &["--out", dir.path().to_str().unwrap()]);
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let doc = report(&dir.path().join("split.json"));
    let record = &doc["records"][0];
    assert_eq!(record["params"]["h"], 1);
    assert_eq!(record["details"]["chern_upper"], -1);
    assert!(record["max_residual"].as_f64().unwrap() <= 1e-7);
    let frame =
        z2frames::decomposition::FrameField::read(&dir.path().join("split_frame.txt")).unwrap();
    assert_eq!(frame.rank(), 2);
}

#[test]
fn sweep_emits_a_phase_diagram() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "schema": 1,
        "command": "sweep",
        "model": {"kind": "haldane"},
        "sweep": {"axes": [{"param": "mass", "min": 0.0, "max": 1.0, "steps": 3}]}
    }"#;
    let status = run(
        dir.path(),
        config,
        &["--out", dir.path().to_str().unwrap(), "--workers", "2"],
    );
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "mass,chern,delta,min_gap,max_residual,outcome");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("1.0000000000000000e0,0,"));
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad_field =
        r#"{"schema": 1, "command": "chern", "model": {"kind": "haldane", "mas": 0.2}}"#;
    let status = run(dir.path(), bad_field, &[]);
    assert_eq!(status.status.code(), Some(4));
    let stderr = String::from_utf8_lossy(&status.stderr);
    assert!(
        stderr.contains("mas") && stderr.contains("line 1"),
        "{stderr}"
    );

    let bad_value = r#"{"schema": 1, "command": "sweep", "model": {"kind": "haldane"},
        "sweep": {"axes": [{"param": "mass", "min": 0.0, "max": 1.0, "steps": 1}]}}"#;
    let status = run(dir.path(), bad_value, &[]);
    assert_eq!(status.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&status.stderr).contains("sweep.axes[0].steps"));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(
        &path,
        r#"{"schema": 1, "command": "delta", "model": {"kind": "kane_mele"}}"#,
    )
    .unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_z2frames"))
        .arg("--config")
        .arg(&path)
        .env("Z2FRAMES_OUT", dir.path().join("env"))
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let doc = report(&dir.path().join("env").join("delta.json"));
    assert_eq!(doc["records"][0]["delta"], -1);
}
