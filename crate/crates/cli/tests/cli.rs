use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spectral-lab"));
    c.env_remove("SPECTRAL_LAB_CACHE");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// The JSON error object on the last stderr line.
fn error_of(o: &Output) -> Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(err.lines().last().expect("stderr has a line")).expect("stderr error is JSON")
}

fn manifest(out: &Path) -> Value {
    let path = format!("{}.manifest.json", out.display());
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn propagate_matches_oracle() {
    let o = run(&["propagate", "--gamma", "2", "--v", "0.5", "--k", "1.3", "--depth", "12", "--oracle"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let diffs = column(&stdout(&o), "oracle_diff");
    assert_eq!(diffs.len(), 12);
    let max = diffs.iter().map(|d| d.parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(max < 1e-10, "max oracle diff {max}");
}

#[test]
fn domain_and_precision_errors_exit_2() {
    let o = run(&["propagate", "--k", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["error"], "DomainError");

    let o = run(&["propagate", "--k", "1", "--depth", "2000", "--bits", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["error"], "PrecisionFloor");

    let o = run(&["propagate", "--k", "1", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["error"], "UsageError");
}

#[test]
fn sweep_records_job_errors_and_strict_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let outs = out.to_str().unwrap();
    // k = 0.01 is outside the allowed range; the other two succeed
    let o = run(&["propagate", "--k-grid", "0.01:1.2:3", "--depth", "8", "--out", outs]);
    assert!(o.status.success());
    let m = manifest(&out);
    let statuses: Vec<&str> = m["jobs"].as_array().unwrap().iter().map(|j| j["status"].as_str().unwrap()).collect();
    assert_eq!(statuses, ["DomainError", "ok", "ok"]);

    let o = run(&["propagate", "--k-grid", "0.01:1.2:3", "--depth", "8", "--strict"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ensemble_is_reproducible_across_runs_and_workers() {
    let args = ["ensemble", "--gamma", "2", "--v", "0.5", "--k", "sqrt2", "--depth", "500", "--samples", "200", "--seed", "7"];
    let a = run(&args);
    let b = run(&args);
    let mut with_workers = args.to_vec();
    with_workers.extend(["--workers", "1"]);
    let c = run(&with_workers);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let line: Value = serde_json::from_str(stdout(&a).lines().next().unwrap()).unwrap();
    assert_eq!(line["samples"].as_array().unwrap().len(), 200);
    assert_eq!(line["base_seed"], 7);
}

#[test]
fn example_rows_are_all_inside() {
    let o = run(&["bounds", "--example-s5", "--count", "40"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let ae = column(&csv, "ae_inside");
    assert_eq!(ae.len(), 40);
    assert!(ae.iter().chain(&column(&csv, "all_inside")).all(|c| c == "true"));
}

#[test]
fn manifest_cache_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let args = |out: &Path| {
        let mut c = bin();
        c.args(["growth", "--gamma", "3", "--v", "0.2", "--depth", "30", "--k-grid", "0.8:2.2:4", "--out"]);
        c.arg(out).env("SPECTRAL_LAB_CACHE", &cache);
        c
    };
    assert!(args(&first).output().unwrap().status.success());
    assert!(args(&second).output().unwrap().status.success());
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    let m1 = manifest(&first);
    let m2 = manifest(&second);
    assert_eq!(m1["cache"], "miss");
    assert_eq!(m2["cache"], "hit");
    assert_eq!(m1["input_hash"], m2["input_hash"]);
    assert_eq!(m1["params"]["spec"]["gamma"], 3);
    assert_eq!(m1["jobs"].as_array().unwrap().len(), 4);

    let mpath = format!("{}.manifest.json", first.display());
    let o = run(&["replay", &mpath]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut tampered = m1.clone();
    tampered["output_sha256"] = Value::String("0".repeat(64));
    let tpath = dir.path().join("tampered.json");
    fs::write(&tpath, serde_json::to_string(&tampered).unwrap()).unwrap();
    assert_eq!(run(&["replay", tpath.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn corrupted_cache_entry_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("o.csv");
    let go = || {
        bin().args(["propagate", "--k", "1.2", "--depth", "10", "--out"]).arg(&out).env("SPECTRAL_LAB_CACHE", &cache).output().unwrap().status
    };
    assert!(go().success());
    let good = fs::read(&out).unwrap();
    for entry in fs::read_dir(&cache).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "out") {
            fs::write(&p, b"garbage").unwrap();
        }
    }
    assert!(go().success());
    assert_eq!(manifest(&out)["cache"], "miss");
    assert_eq!(fs::read(&out).unwrap(), good);
}

#[test]
fn config_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"gamma": 3, "v": 0.25, "depth": 9, "k": 2.0}"#).unwrap();
    let o = run(&["propagate", "--config", cfg.to_str().unwrap(), "--k", "1.1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    let ks = column(&csv, "k");
    assert_eq!(ks.len(), 9);
    assert_eq!(ks[0].parse::<f64>().unwrap(), 1.1);
    assert_eq!(column(&csv, "x")[1], "9");
}

#[test]
fn explicit_positions_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("sites.txt");
    fs::write(&file, "# x amplitude\n2 0.5\n16 0.5\n\n512 -0.25\n4294967296 0.5\n").unwrap();
    let o = run(&["propagate", "--explicit", file.to_str().unwrap(), "--k", "1.4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&stdout(&o), "x"), ["2", "16", "512", "4294967296"]);

    fs::write(&file, "2 0.5 7\n").unwrap();
    let o = run(&["propagate", "--explicit", file.to_str().unwrap(), "--k", "1.4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn hausdorff_tasks() {
    let o = run(&["hausdorff", "--task", "dyadic", "--eps", "0.5", "--depth", "20", "--enumerate"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["model"]["strict"], 6196);
    assert_eq!(v["enumerated"][0], 6196);

    let o = run(&["hausdorff", "--task", "partition", "--beta", "1", "--gamma", "1000", "--level", "1"]);
    assert!(o.status.success());
    assert_eq!(column(&stdout(&o), "k").len(), 159);

    let o = run(&["hausdorff", "--task", "covering", "--eps", "0.001", "--delta1", "0.1", "--delta2", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["error"], "HypothesisError");
}

#[test]
fn wholeline_check_and_banded_output() {
    let o = run(&["wholeline", "--L", "60", "--phi", "pi/4", "--v", "0.3"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["agrees_1e-10"], true);
    assert_eq!(v["whole"].as_array().unwrap().len(), 120);

    let o = run(&["wholeline", "--L", "6", "--banded", "odd"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("0: "));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn selfcheck_subset() {
    let o = run(&["selfcheck", "--only", "2,6,8"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().all(|l| l.starts_with("PASS")));
    assert_eq!(run(&["selfcheck", "--only", "99"]).status.code(), Some(2));
}
