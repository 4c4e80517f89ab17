use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acr_core::harness;
use acr_core::stats::simulate::{Simulation, REFERENCE_BETA};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/corpus.jsonl")
}

fn acr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acr"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn perturb_is_deterministic_and_filtered() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = acr(&["perturb", "--dataset", s(&corpus()), "--seed", "42", "--ptypes", "p2,p4", "--out", s(out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let va = fs::read(a.join("variants.jsonl")).unwrap();
    assert_eq!(va, fs::read(b.join("variants.jsonl")).unwrap());
    let text = String::from_utf8(va).unwrap();
    assert!(text.lines().count() > 0);
    assert!(text.lines().all(|l| l.contains("\"ptype\":\"p2\"") || l.contains("\"ptype\":\"p4\"")));
}

#[test]
fn evaluate_with_perfect_mock() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let o = acr(&["evaluate", "--dataset", s(&corpus()), "--adapter", "mock:echo-gt", "--samples", "2", "--out", s(out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let aggs: Vec<harness::Aggregate> = harness::read_csv(&out.join("aggregates.csv")).unwrap();
    assert_eq!(aggs.len(), 9);
    for a in &aggs {
        assert_eq!((a.delta_exm, a.delta_em, a.ree, a.codebleu), (0.0, 0.0, Some(0.0), 1.0), "{a:?}");
    }
    let o = acr(&["report", "--out", s(out)]);
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(out.join("report.md")).unwrap();
    assert!(report.contains("Largest ΔEXM per model"));
}

#[test]
fn regress_recovers_fixture_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let rows = Simulation::default().rows(7);
    fs::write(out.join("obs.csv"), harness::to_csv(&rows).unwrap()).unwrap();
    let o = acr(&[
        "regress",
        "--observations",
        s(&out.join("obs.csv")),
        "--standardize",
        "off",
        "--format",
        "csv",
        "--out",
        s(out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(out.join("regression.csv")).unwrap();
    let est: Vec<(f64, f64)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[1].parse().unwrap(), rec[2].parse().unwrap())
        })
        .collect();
    assert_eq!(est.len(), REFERENCE_BETA.len());
    // One replication: each estimate within four standard errors of truth.
    for ((b, se), t) in est.iter().zip(REFERENCE_BETA) {
        assert!((b - t).abs() < 4.0 * se, "{b} ± {se} vs {t}");
    }
    assert!(out.join("diagnostics.csv").exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    let good = fs::read_to_string(corpus()).unwrap();
    let first = good.lines().next().unwrap();
    fs::write(&bad, format!("{first}\n{{\"id\": \"x\"}}\n")).unwrap();
    let o = acr(&["perturb", "--dataset", s(&bad), "--out", s(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(1));
    let o = acr(&["perturb", "--dataset", s(&dir.path().join("missing.jsonl")), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let o = acr(&["perturb", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}
