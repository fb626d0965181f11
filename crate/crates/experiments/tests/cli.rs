use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use robust_sparse_experiments::output::{read_csv, CSV_HEADER};

fn rsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsr")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) {
    let out = rsr(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn mean_suite_reruns_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        run_ok(&["mean", "--scale", "0.3", "--seed", "5", "--out", out.to_str().unwrap()]);
    }
    let csv = fs::read(a.join("results.csv")).unwrap();
    assert_eq!(csv, fs::read(b.join("results.csv")).unwrap());
    assert!(String::from_utf8_lossy(&csv).starts_with(CSV_HEADER));
    assert!(a.join("spec.json").exists());
    let rows = read_csv(fs::File::open(a.join("results.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.suite == "mean" && r.wall_time_ms.is_none()));
}

#[test]
fn config_file_drives_a_small_regression() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    fs::write(
        &cfg,
        r#"{"seeds": 2, "t_max": 3, "grid": [{"eps": 0.1, "k": 2, "d": 20, "sigma2": 0.01}]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    run_ok(&[
        "regress",
        "--config",
        cfg.to_str().unwrap(),
        "--estimator",
        "ellipsoid",
        "--timing",
        "--out",
        out.to_str().unwrap(),
    ]);
    let rows = read_csv(fs::File::open(out.join("results.csv")).unwrap()).unwrap();
    let sq: Vec<_> = rows.iter().filter(|r| r.metric == "sq_error").collect();
    assert_eq!(sq.len(), 2 * 4);
    assert!(rows.iter().all(|r| r.d == 20 && r.wall_time_ms.is_some()));
    assert!(fs::read_dir(&out).unwrap().any(|e| has_ext(&e.unwrap().path(), "svg")));
}

fn has_ext(p: &Path, ext: &str) -> bool {
    p.extension().is_some_and(|e| e == ext)
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = rsr(&["counterexample", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("counterexample.json").exists());
    assert_eq!(rsr(&["mean", "--scale", "3"]).status.code(), Some(1));
    assert_eq!(rsr(&["bogus"]).status.code(), Some(1));
}
