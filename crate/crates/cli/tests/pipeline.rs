// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::Command;

use lprobe_cli::probe_cmd::read_probe_file;
use lprobe_core::archive::{read_archive, ArchiveKind};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn tiny_model() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/tiny_model")
}

fn lprobe(args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_lprobe"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn extract(out: &Path, kinds: &str, extra: &[&str]) {
    let corpus = fixtures().join("corpus");
    let model = tiny_model();
    let mut args = vec!["extract", "--model", s(&model), "--corpus", s(&corpus), "--out", s(out), "--kinds", kinds];
    args.extend_from_slice(extra);
    assert_eq!(lprobe(&args), 0);
}

#[test]
fn embedding_archive_counts() {
    let dir = tempfile::tempdir().unwrap();
    extract(dir.path(), "embedding", &[]);
    let a = read_archive(dir.path().join("anaphor_mini.embedding.lpa")).unwrap();
    assert_eq!(a.kind, ArchiveKind::Embedding);
    assert_eq!(a.units.len(), 3);
    assert_eq!(a.n_records(), 10);
    assert!(a.units.iter().all(|u| u.dim == 8));
    assert_eq!(a.paradigm_id.as_deref(), Some("anaphor_mini"));
    assert!(dir.path().join("extract.manifest.json").exists());
}

#[test]
fn attention_archive_dims() {
    let dir = tempfile::tempdir().unwrap();
    extract(dir.path(), "attention_concat,attention_head", &["--pad-to", "16"]);
    let cat = read_archive(dir.path().join("wh_mini.attention_concat.lpa")).unwrap();
    assert_eq!(cat.units.len(), 2);
    assert!(cat.units.iter().all(|u| u.dim == 2 * 16 * 16));
    let heads = read_archive(dir.path().join("wh_mini.attention_head.lpa")).unwrap();
    assert_eq!(heads.units.len(), 4);
    assert!(heads.units.iter().all(|u| u.dim == 16 * 16));
}

#[test]
fn pad_too_small_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixtures().join("corpus");
    let model = tiny_model();
    let code = lprobe(&[
        "extract", "--model", s(&model), "--corpus", s(&corpus), "--out", s(dir.path()),
        "--kinds", "attention_concat", "--pad-to", "2",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    extract(a.path(), "embedding,attention_concat", &["--jobs", "1"]);
    extract(b.path(), "embedding,attention_concat", &["--jobs", "3"]);
    for name in ["anaphor_mini.embedding.lpa", "wh_mini.attention_concat.lpa"] {
        assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    }

    let vectors = fixtures().join("vectors.txt");
    let corpus = fixtures().join("corpus");
    for d in [a.path(), b.path()] {
        assert_eq!(lprobe(&["extract-static", "--vectors", s(&vectors), "--corpus", s(&corpus), "--out", s(d)]), 0);
    }
    let name = "wh_mini.static_bow.lpa";
    assert_eq!(std::fs::read(a.path().join(name)).unwrap(), std::fs::read(b.path().join(name)).unwrap());
    let bow = read_archive(a.path().join(name)).unwrap();
    assert_eq!(bow.units.len(), 1);
    assert_eq!(bow.units[0].dim, 4);

    let ra = a.path().join("res");
    let rb = b.path().join("res");
    assert_eq!(lprobe(&["probe", s(a.path()), "--out", s(&ra), "--folds", "5"]), 0);
    assert_eq!(lprobe(&["probe", s(b.path()), "--out", s(&rb), "--folds", "5", "--jobs", "1"]), 0);
    for name in ["anaphor_mini.embedding.probe.json", "wh_mini.static_bow.probe.json"] {
        assert_eq!(std::fs::read(ra.join(name)).unwrap(), std::fs::read(rb.join(name)).unwrap());
    }
}

/// Full pipeline into `root`; returns the summary path.
fn pipeline(root: &Path, kinds: &str) -> PathBuf {
    let arch = root.join("arch");
    extract(&arch, kinds, &[]);
    let vectors = fixtures().join("vectors.txt");
    let corpus = fixtures().join("corpus");
    assert_eq!(lprobe(&["extract-static", "--vectors", s(&vectors), "--corpus", s(&corpus), "--out", s(&arch)]), 0);
    let res = root.join("res");
    assert_eq!(lprobe(&["probe", s(&arch), "--out", s(&res), "--folds", "5"]), 0);
    let sum = root.join("sum");
    let complexity = fixtures().join("complexity.json");
    assert_eq!(
        lprobe(&["analyze", s(&res), "--corpus", s(&corpus), "--complexity", s(&complexity), "--out", s(&sum)]),
        0
    );
    sum.join("summary.json")
}

#[test]
fn probe_results_are_grouped_and_sorted() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), "embedding,attention_head");
    let f = read_probe_file(&dir.path().join("res/anaphor_mini.attention_head.probe.json")).unwrap();
    assert!(f.failures.is_empty());
    let units: Vec<_> = f.results.iter().map(|r| r.unit).collect();
    let mut sorted = units.clone();
    sorted.sort();
    assert_eq!(units, sorted);
    for r in &f.results {
        assert_eq!(r.straddling_pairs, 0);
        assert_eq!(r.fold_f1.len(), 5);
        assert_eq!(r.archive_sha256, f.archive_sha256);
    }
}

#[test]
fn csv_report_has_one_depth_row_per_paradigm() {
    let dir = tempfile::tempdir().unwrap();
    let summary = pipeline(dir.path(), "embedding");
    let (a, b) = (dir.path().join("csv_a"), dir.path().join("csv_b"));
    for d in [&a, &b] {
        assert_eq!(lprobe(&["report", s(&summary), "--format", "csv", "--out", s(d)]), 0);
    }
    let text = std::fs::read_to_string(a.join("depth_reports.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,paradigm_id,level,capture_depth,mean_complexity");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("tiny_model,anaphor_mini,morphology,"));
    assert!(lines[2].starts_with("tiny_model,wh_mini,syntax,"));
    for name in ["depth_reports.csv", "curves.csv", "scores.csv", "levels.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
    }

    let jl = dir.path().join("jl");
    assert_eq!(lprobe(&["report", s(&summary), "--format", "json-lines", "--out", s(&jl)]), 0);
    let text = std::fs::read_to_string(jl.join("report.jsonl")).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["table"].is_string());
    }
}

#[test]
fn single_curve_gives_single_polyline_svg() {
    let dir = tempfile::tempdir().unwrap();
    let arch = dir.path().join("arch");
    extract(&arch, "embedding", &[]);
    let res = dir.path().join("res");
    let archive = arch.join("anaphor_mini.embedding.lpa");
    assert_eq!(lprobe(&["probe", s(&archive), "--out", s(&res), "--folds", "5"]), 0);
    let sum = dir.path().join("sum");
    let corpus = fixtures().join("corpus");
    assert_eq!(lprobe(&["analyze", s(&res), "--corpus", s(&corpus), "--out", s(&sum)]), 0);
    let svg_dir = dir.path().join("svg");
    assert_eq!(lprobe(&["report", s(&sum.join("summary.json")), "--format", "svg", "--out", s(&svg_dir)]), 0);

    let svgs: Vec<PathBuf> = std::fs::read_dir(&svg_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "svg"))
        .collect();
    assert_eq!(svgs.len(), 1, "{svgs:?}");
    let text = std::fs::read_to_string(&svgs[0]).unwrap();
    assert_eq!(text.matches("<polyline").count(), 1);
    let points = text.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    assert_eq!(points.split(' ').count(), 3);
}

#[test]
fn config_file_supplies_settings() {
    let dir = tempfile::tempdir().unwrap();
    let arch = dir.path().join("arch");
    extract(&arch, "embedding", &[]);
    let cfg = dir.path().join("probe.toml");
    std::fs::write(&cfg, format!("folds = 5\nseed = 3\nlambda = 0.5\nout = {:?}\n", s(&dir.path().join("res")))).unwrap();
    assert_eq!(lprobe(&["probe", s(&arch), "--config", s(&cfg)]), 0);
    let f = read_probe_file(&dir.path().join("res/wh_mini.embedding.probe.json")).unwrap();
    assert_eq!(f.results[0].config.n_folds, 5);
    assert_eq!(f.results[0].config.seed, 3);
    assert_eq!(f.results[0].config.l2_lambda, 0.5);

    std::fs::write(&cfg, "fold = 5\n").unwrap();
    assert_eq!(lprobe(&["probe", s(&arch), "--config", s(&cfg), "--out", "x"]), 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lprobe(&["frobnicate"]), 1);
    assert_eq!(lprobe(&["extract", "--corpus", "x"]), 1);
    assert_eq!(lprobe(&["probe", "nope.lpa", "--out", s(dir.path())]), 2);
    assert_eq!(lprobe(&["probe", s(dir.path()), "--out", s(dir.path()), "--folds", "1"]), 1);

    let junk = dir.path().join("junk.lpa");
    std::fs::write(&junk, b"LPROBEA1\x05\x00").unwrap();
    assert_eq!(lprobe(&["probe", s(&junk), "--out", s(dir.path())]), 2);
    assert_eq!(lprobe(&["validate", s(&junk)]), 2);

    let summary = dir.path().join("summary.json");
    std::fs::write(&summary, "{}").unwrap();
    assert_eq!(lprobe(&["report", s(&summary), "--format", "pdf", "--out", s(dir.path())]), 1);
    assert_eq!(lprobe(&["--version"]), 0);
}

#[test]
fn analyze_names_missing_paradigms() {
    let dir = tempfile::tempdir().unwrap();
    let summary = pipeline(dir.path(), "embedding");
    assert!(summary.exists());
    let only_one = dir.path().join("one");
    std::fs::create_dir_all(&only_one).unwrap();
    std::fs::copy(fixtures().join("corpus/wh_mini.jsonl"), only_one.join("wh_mini.jsonl")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_lprobe"))
        .args(["analyze", s(&dir.path().join("res")), "--corpus", s(&only_one), "--out", s(&dir.path().join("x"))])
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("anaphor_mini"));
}
