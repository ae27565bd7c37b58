use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn qa_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qa-lab")).args(args).output().expect("spawn qa-lab")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qa-lab-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, json).unwrap();
    path
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("error report is JSON")
}

const LINEAR: &str = r#""schedule": { "source": "linear", "a0": 3.0, "b1": 2.0, "points": 41 }"#;

#[test]
fn lamb_writes_outputs_and_manifest() {
    let dir = scratch("lamb");
    let out = qa_lab(&["lamb", "--out", dir.to_str().unwrap(), "--threads", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["experiment"], "lamb");
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"], summary["config_hash"]);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.join("lamb.csv")).unwrap();
    assert!(csv.starts_with("nu_ghz,numeric_ghz,closed_form_ghz,relative_difference\n"));
}

#[test]
fn unknown_key_exits_with_config_code() {
    let dir = scratch("badkey");
    let cfg = write_config(&dir, r#"{ "version": 1, "experiment": { "name": "lamb", "params": { "kapa": 3 } } }"#);
    let out = qa_lab(&["lamb", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "config");
}

#[test]
fn subcommand_must_match_config() {
    let dir = scratch("mismatch");
    let cfg = write_config(&dir, r#"{ "version": 1, "experiment": { "name": "lamb", "params": {} } }"#);
    let out = qa_lab(&["glass", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn validate_prints_hash_without_running() {
    let dir = scratch("validate");
    let cfg = write_config(&dir, r#"{ "version": 1, "seed": 4, "experiment": { "name": "glass", "params": { "instances": 2 } } }"#);
    let out = qa_lab(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"instances\": 2"));
    assert!(text.lines().any(|l| l.starts_with("config_hash ") && l.len() == "config_hash ".len() + 64));
}

#[test]
fn spectrum_dumps_operator() {
    let dir = scratch("spectrum");
    let cfg = write_config(
        &dir,
        &format!(
            r#"{{ "version": 1, {LINEAR}, "experiment": {{ "name": "spectrum", "params": {{ "points": 5, "s_min": 0.2, "s_max": 0.4, "dump_operator_at": 0.3, "spec": {{ "n": 4, "h1": 0.44, "h2": -1.0, "j": 1.0 }} }} }} }}"#
        ),
    );
    let out = qa_lab(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dump = std::fs::read_to_string(dir.join("operator.txt")).unwrap();
    let first: Vec<&str> = dump.lines().next().unwrap().split_whitespace().collect();
    assert_eq!(first.len(), 3);
    assert!(first[0].parse::<usize>().is_ok() && first[2].parse::<f64>().is_ok());
}

#[test]
fn svmc_seed_flag_controls_results() {
    let dir = scratch("svmc");
    let cfg = write_config(
        &dir,
        &format!(r#"{{ "version": 1, {LINEAR}, "experiment": {{ "name": "svmc", "params": {{ "restarts": 4, "sweeps": 500 }} }} }}"#),
    );
    let run = |seed: &str, sub: &str| {
        let out_dir = dir.join(sub);
        let out = qa_lab(&["svmc", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--seed", seed]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(out_dir.join("svmc_results.csv")).unwrap()
    };
    let a = run("11", "a");
    assert_eq!(a, run("11", "b"));
    assert_ne!(a, run("12", "c"));
    assert!(a.starts_with("instance,seed,success,energy\n"));
    assert_eq!(a.lines().count(), 5);
    let problem = std::fs::read_to_string(dir.join("a").join("problem_0.txt")).unwrap();
    assert_eq!(problem.lines().next(), Some("16"));
}
