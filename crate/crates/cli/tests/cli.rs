use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pbnbp(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbnbp"))
        .args(args)
        .current_dir(dir)
        .env_remove("PBNBP_WORKERS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> Output {
    let out = pbnbp(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Row count from the alist header.
fn alist_rows(text: &str) -> usize {
    let first: Vec<usize> = text.lines().next().unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    first[1]
}

const RUN: &str = r#"{
  "code": {"rm": {"r": 1, "m": 3}}, "l_max": 3, "family": "nbp",
  "train": {"batch_size": 16, "max_batches": 40, "plateau_window": 10, "seed": 3},
  "prune": {"stop_rule": {"target_cn_count": {"target": 20}}, "group_schedule": [[0, 2]], "strategy": STRATEGY},
  "finalize": ["D1", "D2", "D3"],
  "output_dir": "OUT"
}"#;

fn write_run(dir: &Path, name: &str, strategy: &str, out: &str) -> String {
    let text = RUN.replace("STRATEGY", strategy).replace("OUT", out);
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

#[test]
fn checks_row_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = ok(&["checks", "rm", "2", "5", "--all-min-weight"], tmp.path());
    assert_eq!(alist_rows(&String::from_utf8(out.stdout).unwrap()), 620);
    let out = ok(&["checks", "rm", "1", "3", "--all-min-weight"], tmp.path());
    assert_eq!(alist_rows(&String::from_utf8(out.stdout).unwrap()), 14);
    ok(&["checks", "rm", "2", "5", "-o", "std.alist"], tmp.path());
    assert_eq!(alist_rows(&fs::read_to_string(tmp.path().join("std.alist")).unwrap()), 16);
    assert!(tmp.path().join("std.alist.config.json").exists());
    let out = ok(&["checks", "rm", "2", "5", "--subsample", "100", "7"], tmp.path());
    assert_eq!(alist_rows(&String::from_utf8(out.stdout).unwrap()), 100);
}

#[test]
fn enumeration_bound_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = pbnbp(&["checks", "rm", "3", "7", "--all-min-weight"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("enumeration bound"));
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("bad.json"), r#"{"code": "ccsds", "l_max": 2, "output_dir": "o", "extra": 0}"#).unwrap();
    assert_eq!(pbnbp(&["prune", "--config", "bad.json"], tmp.path()).status.code(), Some(2));
    assert_eq!(pbnbp(&["train", "--config", "missing.json"], tmp.path()).status.code(), Some(2));
    assert_eq!(pbnbp(&["checks", "rm", "x", "5"], tmp.path()).status.code(), Some(2));
}

#[test]
fn prune_eval_quantize_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = write_run(dir, "run.json", r#""min_weight""#, "out");
    ok(&["prune", "--config", &cfg], dir);
    for f in ["model_D1.json", "model_D2.json", "model_D3.json", "prune_history.csv", "complexity.json", "effective_config.json"] {
        assert!(dir.join("out").join(f).exists(), "{f} missing");
    }
    let cx: Value = serde_json::from_str(&fs::read_to_string(dir.join("out/complexity.json")).unwrap()).unwrap();
    assert_eq!(cx["normalized"], 20);
    assert_eq!(cx["parameters"]["D2"], 0);
    let header = fs::read_to_string(dir.join("out/prune_history.csv")).unwrap();
    assert!(header.starts_with("step,remaining_cn,loss,bler_probe\n"));
    let eff: Value = serde_json::from_str(&fs::read_to_string(dir.join("out/effective_config.json")).unwrap()).unwrap();
    assert_eq!(eff["train"]["learning_rate"], 0.001);
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("out/model_D1.json")).unwrap()).unwrap();
    assert_eq!(m["provenance"]["config_hash"].as_str().unwrap().len(), 64);

    // Unit-weight D2 is plain BP on the pruned plan.
    let eval = ["--snr", "2,3", "--min-errors", "30", "--max-blocks", "20000", "--seed", "5"];
    let mut a = vec!["eval", "--model", "out/model_D2.json", "--out", "d2.csv"];
    a.extend(eval);
    ok(&a, dir);
    let mut b = vec!["eval", "--decoder", "bp", "--code", "rm", "1", "3", "--plan-from", "out/model_D1.json", "--out", "bp.csv"];
    b.extend(eval);
    ok(&b, dir);
    let d2 = fs::read(dir.join("d2.csv")).unwrap();
    assert_eq!(d2, fs::read(dir.join("bp.csv")).unwrap());
    assert!(String::from_utf8_lossy(&d2).starts_with("ebn0_db,bler,ber,blocks,block_errors,std_err\n"));

    // Same command twice, and with a different worker count: identical bytes.
    let mut c = vec!["eval", "--model", "out/model_D1.json", "--out", "r1.csv"];
    c.extend(eval);
    ok(&c, dir);
    c[4] = "r2.csv";
    ok(&c, dir);
    c[4] = "r3.csv";
    c.extend(["--workers", "3"]);
    ok(&c, dir);
    let r1 = fs::read(dir.join("r1.csv")).unwrap();
    assert_eq!(r1, fs::read(dir.join("r2.csv")).unwrap());
    assert_eq!(r1, fs::read(dir.join("r3.csv")).unwrap());

    let mism = pbnbp(&["eval", "--model", "out/model_D1.json", "--code", "rm", "2", "5", "--snr", "3", "--out", "x.csv"], dir);
    assert_eq!(mism.status.code(), Some(2));

    let ml = ["eval", "--decoder", "ml", "--code", "rm", "1", "3", "--snr", "3", "--min-errors", "30", "--out", "ml.csv"];
    ok(&ml, dir);
    let bad = pbnbp(&["quantize", "--model", "out/model_D1.json", "--bits", "1", "3", "3", "--qat", "-o", "q.json"], dir);
    assert_eq!(bad.status.code(), Some(2));
    ok(&["quantize", "--model", "out/model_D1.json", "--bits", "5", "5", "5", "--joint", "--max-batches", "5", "-o", "q.json"], dir);
    let q: Value = serde_json::from_str(&fs::read_to_string(dir.join("q.json")).unwrap()).unwrap();
    assert!(!q["quantization"].is_null());
    ok(&["eval", "--model", "q.json", "--snr", "3", "--min-errors", "10", "--out", "q.csv"], dir);
}

#[test]
fn random_strategy_keeps_count_but_changes_plan() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let a = write_run(dir, "a.json", r#""min_weight""#, "a");
    let b = write_run(dir, "b.json", r#"{"random": {"seed": 9}}"#, "b");
    ok(&["prune", "--config", &a, "--max-batches", "10"], dir);
    ok(&["prune", "--config", &b, "--max-batches", "10"], dir);
    let load = |p: &str| -> Value { serde_json::from_str(&fs::read_to_string(dir.join(p)).unwrap()).unwrap() };
    assert_eq!(load("a/complexity.json")["normalized"], load("b/complexity.json")["normalized"]);
    assert_ne!(load("a/model_D1.json")["plan"], load("b/model_D1.json")["plan"]);
}

#[test]
fn divergence_exits_with_3_and_keeps_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let text = RUN
        .replace("STRATEGY", r#""min_weight""#)
        .replace("OUT", "div")
        .replace(r#""seed": 3"#, r#""seed": 3, "learning_rate": 1e308"#);
    fs::write(dir.join("div.json"), text).unwrap();
    let out = pbnbp(&["prune", "--config", "div.json"], dir);
    assert_eq!(out.status.code(), Some(3));
    assert!(dir.join("div/model_D1.json.partial").exists());
    assert!(dir.join("div/prune_history.csv.partial").exists());
}
