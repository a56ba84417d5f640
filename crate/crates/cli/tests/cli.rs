use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use hsol_core::corpus::{parse_corpus, Label};
use hsol_core::evalharness::{confusion, confusion_csv};

fn repo(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

fn toy_conf() -> PathBuf {
    repo("data/toy/toy.conf")
}

fn hsol(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_hsol"))
        .args(args)
        .env("RUST_LOG", "warn")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn sorted(names: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

fn train(out: &Path) {
    ok(&hsol(
        &[
            "train",
            "-c",
            toy_conf().to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        b"",
    ));
}

#[test]
fn train_is_deterministic_and_writes_its_artifacts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    train(a.path());
    train(b.path());
    assert_eq!(
        listing(a.path()),
        sorted(&[
            "model.json",
            "train_report.txt",
            "train_metrics.csv",
            "train_confusion.csv"
        ])
    );
    for f in listing(a.path()) {
        assert_eq!(
            std::fs::read(a.path().join(&f)).unwrap(),
            std::fs::read(b.path().join(&f)).unwrap(),
            "{f} differs"
        );
    }
    let report = std::fs::read_to_string(a.path().join("train_report.txt")).unwrap();
    assert!(report.contains("converged=true"), "{report}");
}

#[test]
fn predict_reproduces_the_in_sample_confusion() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path());
    let records = parse_corpus(&std::fs::read(repo("data/toy/toy_corpus.csv")).unwrap()).unwrap();
    let input: String = records.iter().map(|t| format!("{}\n", t.text)).collect();
    let model = dir.path().join("model.json");
    let out = ok(&hsol(
        &["predict", "-m", model.to_str().unwrap()],
        input.as_bytes(),
    ));
    let predicted: Vec<Label> = out
        .lines()
        .map(|l| l.split('\t').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(predicted.len(), records.len());
    for line in out.lines() {
        assert_eq!(line.split('\t').count(), 4);
    }
    let truth: Vec<Label> = records.iter().map(|t| t.label.unwrap()).collect();
    let expected = confusion_csv(&confusion(&truth, &predicted).unwrap());
    assert_eq!(
        std::fs::read_to_string(dir.path().join("train_confusion.csv")).unwrap(),
        expected
    );

    // Streaming from a file, across several batches, keeps order and count.
    let many: String = (0..1300).map(|i| format!("line {i} vorpak\n")).collect();
    let file = dir.path().join("many.txt");
    std::fs::write(&file, &many).unwrap();
    let out = ok(&hsol(
        &[
            "predict",
            "-m",
            model.to_str().unwrap(),
            file.to_str().unwrap(),
        ],
        b"",
    ));
    assert_eq!(out.lines().count(), 1300);
}

#[test]
fn predict_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path());
    let model = dir.path().join("model.json");
    let m = model.to_str().unwrap();

    assert_eq!(ok(&hsol(&["predict", "-m", m], b"")), "");

    let out = ok(&hsol(
        &["predict", "-m", m],
        b"vorpak skrell the people\n\nno newline at end",
    ));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("hate\t"), "{}", lines[0]);

    let bad = hsol(&["predict", "-m", m], b"fine\n\xff\xfe\n");
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));

    let text = std::fs::read_to_string(&model).unwrap();
    let old = dir.path().join("old.json");
    std::fs::write(
        &old,
        text.replacen("\"feature_version\":1", "\"feature_version\":0", 1),
    )
    .unwrap();
    let out = hsol(&["predict", "-m", old.to_str().unwrap()], b"x\n");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("feature version"));
}

#[test]
fn evaluate_writes_the_documented_artifact_set() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        ok(&hsol(
            &[
                "evaluate",
                "-c",
                toy_conf().to_str().unwrap(),
                "--out",
                d.path().to_str().unwrap(),
            ],
            b"",
        ));
    }
    assert_eq!(
        listing(a.path()),
        sorted(&[
            "grid.csv",
            "holdout_metrics.csv",
            "holdout_confusion.csv",
            "insample_metrics.csv",
            "insample_confusion.csv",
            "evaluate_summary.txt",
            "evaluate.json",
        ])
    );
    for f in listing(a.path()) {
        assert_eq!(
            std::fs::read(a.path().join(&f)).unwrap(),
            std::fs::read(b.path().join(&f)).unwrap(),
            "{f} differs"
        );
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("evaluate.json")).unwrap())
            .unwrap();
    let f1 = json["holdout"]["metrics"]["weighted_f1"].as_f64().unwrap();
    assert!(f1 >= 0.90, "holdout F1 {f1}");
}

#[test]
fn report_and_ingest() {
    let dir = tempfile::tempdir().unwrap();
    train(dir.path());
    let out = dir.path().to_str().unwrap();
    ok(&hsol(
        &["report", "-c", toy_conf().to_str().unwrap(), "--out", out],
        b"",
    ));
    let text = std::fs::read_to_string(dir.path().join("error_report.txt")).unwrap();
    assert!(text.contains("true=hate predicted=hate total="));

    let stats = ok(&hsol(
        &["ingest", repo("data/toy/toy_corpus.csv").to_str().unwrap()],
        b"",
    ));
    assert!(stats.contains("n_total=300\n"));
    assert!(stats.contains("class_column_mismatches=0\n"));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "corpus = nowhere.csv\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = hsol(
        &[
            "train",
            "-c",
            conf.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        b"",
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.csv"));
    assert!(!out_dir.exists(), "no artifacts on failure");

    std::fs::write(&conf, "min_dff = 3\n").unwrap();
    let out = hsol(&["train", "-c", conf.to_str().unwrap()], b"");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("min_dff"));

    assert_eq!(hsol(&["train"], b"").status.code(), Some(2));
    assert_eq!(
        hsol(&["predict", "-m", "/no/such/model.json"], b"")
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn tagger_train_matches_the_bundled_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tagger.model");
    ok(&hsol(
        &[
            "tagger-train",
            repo("data/treebank/mini_treebank.conll").to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
        ],
        b"",
    ));
    assert_eq!(
        std::fs::read(out).unwrap(),
        std::fs::read(repo("data/treebank/mini_tagger.model")).unwrap()
    );
}
