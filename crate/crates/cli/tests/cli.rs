use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mdsample(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdsample"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate(dir: &Path, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join("sim");
    let mut args = vec!["simulate", "--out", path(&out)];
    args.extend_from_slice(extra);
    let res = mdsample(&args);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    out
}

#[test]
fn enumerate_two_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("two.csv");
    fs::write(&data, "Z1,Z2,I1,I2\n1,2,0,0\n2,2,0,0\n1,1,1,0\n").unwrap();
    let out = dir.path().join("en");
    let res = mdsample(&["bn-enumerate", "--data", path(&data), "--out", path(&out)]);
    assert_eq!(code(&res), 0);
    let v = read_json(&out.join("bn-enumerate.json"));
    assert_eq!(v["graphs"], 3);
    let total: f64 = v["modes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["lambda"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn enumeration_refuses_large_networks() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), &["--network", "signaling", "--rows", "5"]);
    let out = dir.path().join("en");
    let res = mdsample(&["bn-enumerate", "--data", path(&sim.join("data.csv")), "--out", path(&out)]);
    assert_eq!(code(&res), 3);
    assert!(!out.exists());
}

#[test]
fn flag_and_data_errors_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let bad_flag = mdsample(&["rastrigin", "--m", "2", "--p-mx", "1.5", "--out", path(&out)]);
    assert_eq!(code(&bad_flag), 2);
    let unknown = mdsample(&["rastrigin", "--bogus"]);
    assert_eq!(code(&unknown), 2);
    let missing = mdsample(&["bn-learn", "--data", "/no/such/file.csv", "--out", path(&out)]);
    assert_eq!(code(&missing), 3);
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "L = 3\nnot a pair\n").unwrap();
    let bad_cfg = mdsample(&["rastrigin", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(code(&bad_cfg), 3);
    assert!(!out.exists());
}

#[test]
fn rastrigin_report_is_normalized() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r");
    let res = mdsample(&[
        "rastrigin", "--m", "2", "--iters", "20000", "--burnin", "2000", "--out", path(&out),
    ]);
    assert_eq!(code(&res), 0);
    let v = read_json(&out.join("rastrigin.json"));
    let modes = v["runs"][0]["report"]["modes"].as_array().unwrap();
    let total: f64 = modes.iter().map(|m| m["lambda"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(v["table"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "L = 6\ndelta-h = 3\niters = 4000\nm = 2\n").unwrap();
    let out = dir.path().join("r");
    let res = mdsample(&["rastrigin", "--config", path(&cfg), "--L", "8", "--out", path(&out)]);
    assert_eq!(code(&res), 0);
    let v = read_json(&out.join("rastrigin.json"));
    assert_eq!(v["config"]["levels"], 8);
    assert_eq!(v["config"]["delta_h"].as_f64(), Some(3.0));
    assert_eq!(v["config"]["total_iters"], 4000);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), &["--network", "graph", "--rows", "80", "--seed", "5"]);
    let data = sim.join("data.csv");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let res = mdsample(&[
            "bn-learn", "--data", path(&data), "--iters", "20000", "--seed", "9",
            "--reference", path(&sim.join("network.txt")), "--out", path(&out),
        ]);
        assert_eq!(code(&res), 0);
        (
            fs::read(out.join("bn-learn.json")).unwrap(),
            fs::read(out.join("adjacency.tsv")).unwrap(),
        )
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn learn_reports_local_networks_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), &["--network", "chain", "--rows", "300"]);
    let out = dir.path().join("l");
    let res = mdsample(&[
        "bn-learn", "--data", path(&sim.join("data.csv")), "--iters", "30000",
        "--threshold", "0.5,0.9", "--reference", path(&sim.join("network.txt")),
        "--out", path(&out),
    ]);
    assert_eq!(code(&res), 0);
    let v = read_json(&out.join("bn-learn.json"));
    let run = &v["runs"][0];
    assert_eq!(run["mean_networks"].as_array().unwrap().len(), 2);
    assert!(run["mean_networks"][0]["counts"]["tp"].is_u64());
    let locals = run["local_networks"].as_array().unwrap();
    let total: f64 = locals.iter().map(|l| l["lambda"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    let tsv = fs::read_to_string(out.join("adjacency.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 6);
}

#[test]
fn row_crossval_gives_one_record_per_fold() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), &["--network", "graph", "--rows", "500"]);
    let out = dir.path().join("cv");
    let res = mdsample(&[
        "crossval", "--data", path(&sim.join("data.csv")), "--folds", "10", "--iters", "50000",
        "--L", "15", "--kstar", "100", "--out", path(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let v = read_json(&out.join("crossval.json"));
    assert_eq!(v["folds"].as_array().unwrap().len(), 10);
    let dr = v["mean_log_pred_dr"].as_f64().unwrap();
    let mean = v["mean_log_pred_mean"].as_f64().unwrap();
    assert!(dr >= mean, "dr {dr} mean {mean}");
}

#[test]
fn condition_crossval_uses_every_label() {
    let dir = tempfile::tempdir().unwrap();
    let sim = simulate(dir.path(), &["--network", "signaling", "--rows", "40"]);
    let out = dir.path().join("cv");
    let res = mdsample(&[
        "crossval", "--data", path(&sim.join("data.csv")), "--by-condition", "--iters", "10000",
        "--reference", path(&sim.join("network.txt")), "--out", path(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let v = read_json(&out.join("crossval.json"));
    let folds = v["folds"].as_array().unwrap();
    assert_eq!(folds.len(), 9);
    assert!(folds.iter().all(|f| f["test_rows"] == 40));
    assert!(v["mean_tp"].is_f64());
}

#[test]
fn simulated_chain_has_no_missed_modes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let res = mdsample(&[
        "bn-sim", "--network", "chain", "--datasets", "1", "--variants", "md", "--iters",
        "200000", "--out", path(&out),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let v = read_json(&out.join("bn-sim.json"));
    assert_eq!(v["table"][0]["variant"], "md");
    assert_eq!(v["table"][0]["missed_modes"].as_f64(), Some(0.0));
}
