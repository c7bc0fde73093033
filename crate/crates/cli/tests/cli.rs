use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_combustion-ns");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env("COMBUSTION_NS_THREADS", "2").output().expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("small.json");
    fs::write(
        &path,
        r#"{
  "grid": {"half_width": 8, "cells": 128},
  "solver": {"t_end": 0.02, "snapshot_every": 0.01},
  "spectral": {"eta_count": 40, "greens_grid": {"half_width": 8, "cells": 256}},
  "kernel": {"grid": {"half_width": 4, "cells": 256}},
  "stability": {"t_end": 0.1, "output_every": 0.05}
}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn manifest_files(dir: &Path) -> Vec<String> {
    let text = fs::read_to_string(dir.join("manifest.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["files"].as_array().unwrap().iter().map(|f| f.as_str().unwrap().to_string()).collect()
}

#[test]
fn spectrum_csv_header() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let dir = tmp.path().join("spec");
    let out = run(&["--config", &cfg, "--run-dir", dir.to_str().unwrap(), "spectrum"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "eta,re_l1,im_l1,re_l2,im_l2,re_l3,im_l3,re_l4,im_l4,gap");
    assert_eq!(lines.count(), 40);
    assert!(manifest_files(&dir).contains(&"spectrum.csv".to_string()));
}

#[test]
fn solve_both_writes_both_trajectories() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let dir = tmp.path().join("solve");
    let out = run(&["--config", &cfg, "--run-dir", dir.to_str().unwrap(), "solve", "--mode", "both"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["picard/trajectory.json", "reference/trajectory.json", "comparison.json", "config.json"] {
        assert!(dir.join(f).exists(), "missing {f}");
    }
    let header = fs::read_to_string(dir.join("picard/fields_00000.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), "x_cell,x_node,v,u,theta,z");

    let diag = tmp.path().join("diag");
    let out = run(&["--run-dir", diag.to_str().unwrap(), "diag", "--run", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(diag.join("picard/ledger.csv").exists());
    assert!(diag.join("reference/decay.json").exists());
}

#[test]
fn repeated_runs_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let dirs: Vec<_> = ["a", "b"].iter().map(|n| tmp.path().join(n)).collect();
    for d in &dirs {
        let out = run(&["--config", &cfg, "--run-dir", d.to_str().unwrap(), "stability"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let files = manifest_files(&dirs[0]);
    assert_eq!(files, manifest_files(&dirs[1]));
    for f in files.iter().map(String::as_str).chain(["manifest.json"]) {
        assert_eq!(fs::read(dirs[0].join(f)).unwrap(), fs::read(dirs[1].join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn timestamped_directory_under_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let out = run(&["--config", &cfg, "--out", tmp.path().to_str().unwrap(), "kernel"]);
    assert!(out.status.success());
    let printed = String::from_utf8(out.stdout).unwrap();
    let path = Path::new(printed.trim());
    assert!(path.starts_with(tmp.path().join("runs")));
    assert!(path.file_name().unwrap().to_str().unwrap().starts_with("kernel-"));
    assert_eq!(fs::read_to_string(path.join("kernel.csv")).unwrap().lines().next(), Some("x,H,Hx"));
}

#[test]
fn unknown_subcommand_exits_2() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn schema_errors_exit_2_with_pointer() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"parameters": {"a": 1, "c_v": 1, "nu": 1, "diff": 1, "rate_k": 1, "heat_q": 1}}"#, "/parameters/mu"),
        (r#"{"seed": 1, "seed": 2}"#, "/seed"),
        (r#"{"grid": {"half_width": 8, "cells": 0}}"#, "/grid"),
        (r#"{"solver": {"tsharp": 1}}"#, "/solver"),
    ];
    for (i, (body, pointer)) in cases.iter().enumerate() {
        let path = tmp.path().join(format!("bad{i}.json"));
        fs::write(&path, body).unwrap();
        let out = run(&["--config", path.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "spectrum"]);
        assert_eq!(out.status.code(), Some(2), "{body}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(pointer), "{body}: {stderr}");
    }
}

#[test]
fn bad_thread_count_is_usage_error() {
    let out = Command::new(BIN).arg("spectrum").env("COMBUSTION_NS_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
