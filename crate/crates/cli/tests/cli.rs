use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use c5_core::synth::{badword_list_text, write_synthetic_wet, SynthConfig};

fn c5(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_c5"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let wet = dir.join("in.wet");
    let cfg = SynthConfig {
        target_bytes: 256 << 10,
        ..SynthConfig::default()
    };
    write_synthetic_wet(fs::File::create(&wet).unwrap(), &cfg).unwrap();
    let bad = dir.join("badwords.txt");
    fs::write(&bad, badword_list_text()).unwrap();
    (wet, bad)
}

fn vocab_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/bert-base-chinese-vocab.txt")
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&c5(&["--help"])), 0);
    assert_eq!(code(&c5(&["--version"])), 0);
    assert_eq!(code(&c5(&["vocab", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&c5(&[])), 1);
    assert_eq!(code(&c5(&["frobnicate"])), 1);
    assert_eq!(code(&c5(&["ingest", "--output", "x"])), 1);
    let dir = tempfile::tempdir().unwrap();
    let out = c5(&[
        "split",
        "--input",
        "r.jsonl",
        "--ratios",
        "1:2",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 1);
    let out = c5(&[
        "clean",
        "--input",
        "a",
        "--output",
        "b",
        "--report",
        "c",
        "--min-chinese-ratio",
        "1.5",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.wet");
    let out = c5(&[
        "ingest",
        "--input",
        s(&missing),
        "--output",
        s(&dir.path().join("r.jsonl")),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));

    let garbage = dir.path().join("garbage.jsonl");
    fs::write(&garbage, "{not json\n").unwrap();
    let out = c5(&[
        "clean",
        "--input",
        s(&garbage),
        "--output",
        "/dev/null",
        "--report",
        "/dev/null",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn stage_chain_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (wet, bad) = fixture(d);
    let run_dir = d.join("run");
    let out = c5(&[
        "run",
        "--input",
        s(&wet),
        "--out-dir",
        s(&run_dir),
        "--badwords",
        s(&bad),
        "--seed",
        "7",
        "--workers",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let r = |n: &str| d.join(n);
    for args in [
        vec!["ingest", "--input", s(&wet), "--output", s(&r("1.jsonl"))],
        vec![
            "clean",
            "--input",
            s(&r("1.jsonl")),
            "--output",
            s(&r("2.jsonl")),
            "--report",
            s(&r("clean.txt")),
        ],
        vec![
            "segment",
            "--input",
            s(&r("2.jsonl")),
            "--output",
            s(&r("3.jsonl")),
            "--badwords",
            s(&bad),
        ],
        vec![
            "dedup",
            "--input",
            s(&r("3.jsonl")),
            "--output",
            s(&r("4.jsonl")),
            "--state",
            s(&r("st")),
        ],
        vec![
            "split",
            "--input",
            s(&r("4.jsonl")),
            "--seed",
            "7",
            "--out-dir",
            s(&r("corpus")),
        ],
    ] {
        let out = c5(&args);
        assert_eq!(
            code(&out),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert_eq!(
        fs::read(r("4.jsonl")).unwrap(),
        fs::read(run_dir.join("records/04-dedup.jsonl")).unwrap()
    );
    assert_eq!(
        fs::read(r("st")).unwrap(),
        fs::read(run_dir.join("dedup.state")).unwrap()
    );
    for split in ["train", "dev", "test"] {
        let a: Vec<_> = fs::read_dir(r("corpus").join(split))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        let b: Vec<_> = fs::read_dir(run_dir.join("corpus").join(split))
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(a.len(), b.len(), "{split}");
    }

    let out = c5(&["validate", "--run-dir", s(&run_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = c5(&["stats", "--input", s(&run_dir.join("corpus"))]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.starts_with("Dataset"));
    assert_eq!(table.lines().count(), 4);

    let emitted = r("all.txt");
    assert_eq!(
        code(&c5(&[
            "emit",
            "--input",
            s(&r("4.jsonl")),
            "--output",
            s(&emitted)
        ])),
        0
    );
    let out = c5(&["stats", "--input", s(&emitted)]);
    assert_eq!(code(&out), 0);
}

#[test]
fn validator_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (wet, bad) = fixture(d);
    let run_dir = d.join("run");
    assert_eq!(
        code(&c5(&[
            "run",
            "--input",
            s(&wet),
            "--out-dir",
            s(&run_dir),
            "--badwords",
            s(&bad)
        ])),
        0
    );
    let records = run_dir.join("records/04-dedup.jsonl");
    let text = fs::read_to_string(&records).unwrap();
    let first = text.lines().next().unwrap().to_string();
    let doctored = first.replacen("\"sentences\":[\"", "\"sentences\":[\"赌博", 1);
    let tampered = text.replacen(&first, &doctored, 1);
    assert_ne!(tampered, text);
    fs::write(&records, tampered).unwrap();
    let out = c5(&["validate", "--input", s(&records), "--badwords", s(&bad)]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Badword"));
}

#[test]
fn dedup_resume_removes_everything_seen_before() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (wet, bad) = fixture(d);
    let run_dir = d.join("run");
    assert_eq!(
        code(&c5(&[
            "run",
            "--input",
            s(&wet),
            "--out-dir",
            s(&run_dir),
            "--badwords",
            s(&bad)
        ])),
        0
    );
    let state = d.join("resumed.state");
    fs::copy(run_dir.join("dedup.state"), &state).unwrap();
    let out = c5(&[
        "dedup",
        "--input",
        s(&run_dir.join("records/04-dedup.jsonl")),
        "--output",
        s(&d.join("again.jsonl")),
        "--state",
        s(&state),
        "--resume",
        "--no-truncate",
    ]);
    assert_eq!(code(&out), 0);
    let left = fs::read_to_string(d.join("again.jsonl")).unwrap();
    for line in left.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["sentences"].as_array().unwrap().len() < 4);
    }
}

#[test]
fn vocab_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let vocab = vocab_path();
    let report = d.join("categories.txt");
    let out = c5(&[
        "vocab",
        "categorize",
        "--vocab",
        s(&vocab),
        "--report",
        s(&report),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("special_tokens\t106"), "{text}");

    let pruned = d.join("pruned.txt");
    let out = c5(&[
        "vocab",
        "prune",
        "--vocab",
        s(&vocab),
        "--output",
        s(&pruned),
    ]);
    assert_eq!(code(&out), 0);
    let n = fs::read_to_string(&pruned).unwrap().lines().count();
    assert!((7500..=8600).contains(&n), "{n}");

    let out = c5(&[
        "vocab",
        "tokenize",
        "--vocab",
        s(&pruned),
        "--text",
        "我爱北京",
        "--surfaces",
    ]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "我 爱 北 京\n");
    assert_eq!(code(&c5(&["vocab", "tokenize", "--vocab", s(&pruned)])), 1);
    let out = c5(&[
        "vocab",
        "prune",
        "--vocab",
        s(&vocab),
        "--output",
        "x",
        "--year-min",
        "2100",
    ]);
    assert_eq!(code(&out), 1);
}
