use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const MD_PROBLEM: &str = r#"{"kind": "hypercube", "dim": 3, "spectral": 0.5, "betaStar": [1, -1, 0.5],
    "noise": {"kind": "martingale-difference", "bound": 1, "laws": [{"values": [-1, 1], "probs": [0.5, 0.5]}]}}"#;

fn mixfree(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixfree")).args(args).output().unwrap()
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mixfree(&args)
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn small_sweep(dir: &Path) -> PathBuf {
    write_config(
        dir,
        "sweep.json",
        &format!(
            r#"{{"problem": {MD_PROBLEM}, "nGrid": [64, 128, 256], "mixingLevels": [0.0, 0.5], "replicates": 5,
                "seed": 1, "certification": {{"directions": 300, "refinementRounds": 1, "seed": 0}}}}"#
        ),
    )
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bound_writes_report_and_terms() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("bound", &shipped("cor32.json"), tmp.path(), &["--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("bound_report.json")).unwrap()).unwrap();
    for key in ["rStar", "nQuad", "nMult", "kMix", "riskBound", "weakVariance", "gamma2", "gammaEta", "c1", "c2", "c3"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["qConj"], "inf");
    let terms = fs::read_to_string(tmp.path().join("terms.csv")).unwrap();
    assert_eq!(terms.lines().next().unwrap(), "bound,group,term,value");
    assert_eq!(terms.lines().count(), 8);
}

#[test]
fn sweep_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_sweep(tmp.path());
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    assert!(run("sweep", &cfg, &a, &["--seed", "7", "--quiet"]).status.success());
    assert!(run("sweep", &cfg, &b, &["--seed", "7", "--quiet"]).status.success());
    assert!(run("sweep", &cfg, &c, &["--quiet"]).status.success());
    let read = |d: &Path| fs::read(d.join("sweep.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    for f in ["summary.json", "sweep.svg"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
    }
    let svg = fs::read_to_string(a.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn simulate_and_certify() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "sim.json", &format!(r#"{{"problem": {MD_PROBLEM}, "n": 300, "seed": 2}}"#));
    assert!(run("simulate", &cfg, tmp.path(), &["--quiet"]).status.success());
    let csv = fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 301);

    let cfg = write_config(
        tmp.path(),
        "cert.json",
        &format!(r#"{{"problem": {MD_PROBLEM}, "grid": {{"directions": 500, "refinementRounds": 1, "seed": 0}}}}"#),
    );
    assert!(run("certify", &cfg, tmp.path(), &["--quiet"]).status.success());
    let cert: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("certificate.json")).unwrap()).unwrap();
    // p = ∞ on the hypercube: sup |⟨v, x⟩| / ‖v‖ peaks at √3 on the diagonal
    let l = cert["L"].as_f64().unwrap();
    assert!(l <= 3f64.sqrt() + 1e-9 && l > 1.5, "L = {l}");
    assert_eq!(cert["method"], "linear-exact");
}

#[test]
fn coverage_and_diagnose() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "cov.json",
        r#"{"kind": "blocked-bernstein",
            "problem": {"kind": "hypercube", "dim": 1, "spectral": 0.7, "betaStar": [1],
                        "noise": {"kind": "bounded-iid", "laws": [{"values": [0], "probs": [1]}]}},
            "observable": [0, 1], "n": 256, "k": 4, "replicates": 500, "seed": 1}"#,
    );
    let o = run("coverage", &cfg, tmp.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("blocked-bernstein"));
    let report: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("coverage.json")).unwrap()).unwrap();
    assert_eq!(report["replicates"], 500);
    assert_eq!(fs::read_to_string(tmp.path().join("coverage.csv")).unwrap().lines().count(), 501);

    let cfg = write_config(
        tmp.path(),
        "diag.json",
        r#"{"problem": {"kind": "explicit", "transition": [[0.5, 0.5], [0.5, 0.5]], "embedding": [[0], [1]],
                        "target": {"tabular": [0.0, 1.0]},
                        "noise": {"kind": "martingale-difference", "laws": [{"values": [-1, 1], "probs": [0.5, 0.5]}]}},
            "class": {"kind": "finite", "hypotheses": [[0, 1], [1, 0], [0.5, 0.5]]},
            "n": 512, "replicates": 20, "seed": 4}"#,
    );
    assert!(run("diagnose", &cfg, tmp.path(), &["--quiet"]).status.success());
    let d: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(d["pairs"], 40);
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write_config(
        tmp.path(),
        "unknown.json",
        &format!(r#"{{"problem": {MD_PROBLEM}, "n": 10, "colour": "blue"}}"#),
    );
    let o = run("simulate", &unknown, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));

    let broken = write_config(tmp.path(), "broken.json", "{\n  \"n\": 10,\n  \"problem\": \n}");
    let o = run("simulate", &broken, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));

    let o = run("bound", &tmp.path().join("missing.json"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));

    let bad_k = write_config(
        tmp.path(),
        "k.json",
        &format!(r#"{{"problem": {MD_PROBLEM}, "bound": {{"n": 100, "k": 7}}}}"#),
    );
    let o = run("bound", &bad_k, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("k = 7"), "{}", stderr(&o));

    assert_eq!(mixfree(&["bound"]).status.code(), Some(1));
    assert_eq!(mixfree(&["frobnicate", "--config", "x"]).status.code(), Some(1));
    assert_eq!(mixfree(&["--help"]).status.code(), Some(0));
}

#[test]
fn numeric_failures_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    // collinear covariates: the population second moment is singular
    let cfg = write_config(
        tmp.path(),
        "singular.json",
        r#"{"problem": {"kind": "explicit", "transition": [[0.5, 0.5], [0.5, 0.5]], "embedding": [[1, 2], [2, 4]],
                        "target": {"linear": [1, 0]},
                        "noise": {"kind": "bounded-iid", "laws": [{"values": [-1, 1], "probs": [0.5, 0.5]}]}},
            "bound": {"n": 100}}"#,
    );
    let o = run("bound", &cfg, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
