//! The `ausam` binary end to end: files written, exit codes, re-runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ausam");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn ausam(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn ausam")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

/// A short two-moons AUSAM run with the sampler active after epoch 1.
fn short_config(dir: &Path, epochs: usize) -> PathBuf {
    let text = fs::read_to_string(configs().join("two_moons_ausam.toml"))
        .unwrap()
        .replace("epochs = 100", &format!("epochs = {epochs}"))
        .replace("n = 2000", "n = 300")
        .replace("e_start = 10", "e_start = 1")
        .replace("output_dir = \"../runs/two_moons_ausam\"", "record_selected_ids = true");
    let path = dir.join("short.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run_files(dir: &Path) -> Vec<Vec<u8>> {
    ["metrics.jsonl", "epochs.jsonl", "checkpoint.bin", "adlp.bin"]
        .iter()
        .map(|f| fs::read(dir.join(f)).unwrap())
        .collect()
}

#[test]
fn train_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 4);
    for run in ["a", "b"] {
        let o = ausam(&["train", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join(run).to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = run_files(&tmp.path().join("a"));
    assert_eq!(a, run_files(&tmp.path().join("b")));
    let metrics = String::from_utf8(a[0].clone()).unwrap();
    assert!(metrics.lines().next().unwrap().contains("\"header\""));
    assert!(metrics.contains("\"selected_ids\""));
    assert!(tmp.path().join("a/summary.json").exists());
}

#[test]
fn seed_flag_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 2);
    let cfg = cfg.to_str().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(code(&ausam(&["train", "--config", cfg, "--out", a.to_str().unwrap()])), 0);
    assert_eq!(code(&ausam(&["train", "--config", cfg, "--out", b.to_str().unwrap(), "--seed", "9"])), 0);
    assert_ne!(run_files(&a)[3], run_files(&b)[3]);
}

#[test]
fn zero_epoch_run_writes_a_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 0);
    let out = tmp.path().join("run");
    let o = ausam(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let metrics = fs::read_to_string(out.join("metrics.jsonl")).unwrap();
    assert_eq!(metrics.lines().count(), 1);
    assert!(out.join("checkpoint.bin").exists());
}

#[test]
fn export_series_prints_requested_columns() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_config(tmp.path(), 2);
    let out = tmp.path().join("run");
    assert_eq!(code(&ausam(&["train", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    let metrics = out.join("metrics.jsonl");
    let steps = fs::read_to_string(&metrics).unwrap().lines().count() - 1;

    let o = ausam(&["export-series", "--metrics", metrics.to_str().unwrap(), "--fields", "step,train_loss"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,train_loss"));
    assert_eq!(lines.count(), steps);

    let o = ausam(&["export-series", "--metrics", metrics.to_str().unwrap(), "--fields", "nope"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
}

#[test]
fn verify_exit_codes() {
    let o = ausam(&["verify", "--suite", "thm4", "--instances", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 11);

    // The literal first-order bound fails on a few of 200 instances.
    let o = ausam(&["verify", "--suite", "thm1", "--instances", "200"]);
    assert_eq!(code(&o), 3);

    assert_eq!(code(&ausam(&["verify", "--suite", "thm9"])), 1);
}

#[test]
fn invalid_input_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nepochs = 2\nmethod = \"adam\"\n").unwrap();
    let o = ausam(&["train", "--config", bad.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);

    let cfg = short_config(tmp.path(), 2);
    let text = fs::read_to_string(&cfg).unwrap().replace("alpha = 0.5", "alpha = 1.5");
    fs::write(&cfg, text).unwrap();
    let o = ausam(&["train", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("r").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));

    assert_eq!(code(&ausam(&["train"])), 1);
    let missing = tmp.path().join("missing.toml");
    assert_eq!(code(&ausam(&["train", "--config", missing.to_str().unwrap()])), 2);
}

#[test]
fn compare_reports_the_ratio_column() {
    let tmp = tempfile::tempdir().unwrap();
    let ausam_cfg = short_config(tmp.path(), 2);
    let sam_cfg = tmp.path().join("sam.toml");
    fs::write(&sam_cfg, fs::read_to_string(&ausam_cfg).unwrap().replace("method = \"ausam\"", "method = \"sam\"")).unwrap();
    let o = ausam(&[
        "compare",
        "--config",
        sam_cfg.to_str().unwrap(),
        ausam_cfg.to_str().unwrap(),
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["rows"][0]["ratio_vs_sam"], 1.0);
    assert_eq!(report["rows"][1]["ratio_vs_sam"], 2.0);
}

/// Runs the quick examples if cargo has built them (it does for `cargo test`).
#[test]
fn quick_examples_run() {
    let dir = Path::new(BIN).parent().unwrap().join("examples");
    for name in ["adlp_sampling", "gradient_check", "checkpoint_roundtrip", "quadratic_sam", "mnist_subset"] {
        let exe = dir.join(name);
        if !exe.exists() {
            continue;
        }
        let o = Command::new(&exe).output().unwrap();
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
