//! End-to-end tests of the command-line binary: exit codes, artifacts and
//! run-to-run reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
seed = 5
[data]
source = "synth_classification"
kind = "blobs"
classes = 3
n = 300
features = 8
noise_sd = 1.0
[model]
hidden_layers = 2
sizing_mode = "exact"
[train]
epochs = 20
batch_size = 32
learning_rate = 0.003
[prune]
epsilon = 0.1
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_odf2nna"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run_ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_writes_artifacts_and_reports_stages() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    let stdout = run_ok(&out);
    assert!(stdout.contains("original"));
    assert!(stdout.contains("refined"));
    for name in ["model.bin", "record.json", "manifest.json"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["dataset_fingerprint"].as_str().unwrap().len() == 64);
}

#[test]
fn identical_runs_produce_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        let out = bin()
            .args(["run"])
            .arg(&cfg)
            .arg("--out-dir")
            .arg(out_dir)
            .output()
            .unwrap();
        run_ok(&out);
    }
    assert_eq!(
        fs::read(a.join("model.bin")).unwrap(),
        fs::read(b.join("model.bin")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("record.json")).unwrap(),
        fs::read(b.join("record.json")).unwrap()
    );
}

#[test]
fn sweep_emits_expected_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out_dir = dir.path().join("sweep");
    let out = bin()
        .args(["sweep"])
        .arg(&cfg)
        .args(["--epsilons", "0.05,0.2,0.6"])
        .arg("--out-dir")
        .arg(&out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    let table = fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "epsilon,stage_or,stage_pwr,stage_pr,params_original,params_pruned,reduction_percent,layers_original,layers_pruned,seed"
    );
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 10);
    }
    // params_pruned is non-increasing down the epsilon sweep
    let pruned: Vec<u64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(5).unwrap().parse().unwrap())
        .collect();
    assert!(pruned.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn eval_inspect_convert_and_control_work_from_run_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out_dir = dir.path().join("out");
    run_ok(
        &bin()
            .args(["run"])
            .arg(&cfg)
            .arg("--out-dir")
            .arg(&out_dir)
            .output()
            .unwrap(),
    );
    let model = out_dir.join("model.bin");

    let eval = bin()
        .args(["eval"])
        .arg(&model)
        .arg(&cfg)
        .args(["--split", "test"])
        .output()
        .unwrap();
    let metrics: serde_json::Value = serde_json::from_str(&run_ok(&eval)).unwrap();
    assert!(metrics["accuracy"].is_number());

    let inspect = bin().args(["inspect"]).arg(&model).output().unwrap();
    let text = run_ok(&inspect);
    assert!(text.contains("total parameters"));

    let text_model = out_dir.join("model.json");
    run_ok(
        &bin()
            .args(["convert"])
            .arg(&model)
            .arg(&text_model)
            .args(["--to", "text"])
            .output()
            .unwrap(),
    );
    let back = out_dir.join("model2.bin");
    run_ok(
        &bin()
            .args(["convert"])
            .arg(&text_model)
            .arg(&back)
            .args(["--to", "binary"])
            .output()
            .unwrap(),
    );
    // text encoding keeps full precision: binary -> text -> binary is
    // byte-identical
    assert_eq!(fs::read(&model).unwrap(), fs::read(&back).unwrap());

    let control = bin()
        .args(["control"])
        .arg(out_dir.join("record.json"))
        .arg(&cfg)
        .output()
        .unwrap();
    let text = run_ok(&control);
    assert!(text.contains("scratch"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = CONFIG.replace("epsilon = 0.1", "epsilon = -1.0");
    let cfg = write_config(dir.path(), &bad);
    let out = bin().args(["run"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("prune.epsilon"), "stderr: {stderr}");
}

#[test]
fn bad_epsilon_list_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = bin()
        .args(["sweep"])
        .arg(&cfg)
        .args(["--epsilons", "0.1,-0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    // corrupt model file: a runtime failure, not a config error
    let model = dir.path().join("model.bin");
    fs::write(&model, b"ODFNgarbage").unwrap();
    let out = bin().args(["eval"]).arg(&model).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let missing = bin()
        .args(["run"])
        .arg(dir.path().join("nope.toml"))
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out_dir = dir.path().join("from-env");
    let out = bin()
        .args(["run"])
        .arg(&cfg)
        .env("ODF2NNA_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    run_ok(&out);
    assert!(out_dir.join("model.bin").exists());
}
