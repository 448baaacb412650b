use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_predsens")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().expect("exit code")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    names
}

fn same_bytes(dir: &Path, a: &str, b: &str, suffixes: &[&str]) {
    for s in suffixes {
        let (x, y) = (fs::read(dir.join(format!("{a}{s}"))).unwrap(), fs::read(dir.join(format!("{b}{s}"))).unwrap());
        assert!(x == y, "{a}{s} and {b}{s} differ");
    }
}

/// Corpus, task model, biased PSM and a full audit; every step run twice.
#[test]
fn pipeline_is_byte_reproducible_and_verifiable() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for p in ["a", "b"] {
        ok(dir, &["corpus", "--out", &format!("corpus_{p}"), "--n", "300", "--seed", "4"]);
    }
    same_bytes(dir, "corpus_a", "corpus_b", &[".jsonl", ".annotations.tsv", ".txt", ".json"]);

    for p in ["a", "b"] {
        ok(dir, &["train", "--data", "corpus_a.jsonl", "--out", &format!("task_{p}"), "--epochs", "3"]);
        ok(dir, &[
            "train", "--data", "corpus_a.jsonl", "--out", &format!("psm_{p}"), "--target", "protected",
            "--epochs", "3", "--downsample-protected", "1",
        ]);
    }
    same_bytes(dir, "task_a", "task_b", &[".model.json", ".txt", ".json"]);
    same_bytes(dir, "psm_a", "psm_b", &[".model.json", ".txt", ".json"]);

    for p in ["a", "b"] {
        ok(dir, &[
            "audit", "--model", "task_a.model.json", "--data", "corpus_a.jsonl", "--psm", "psm_a.model.json",
            "--annotations", "corpus_a.annotations.tsv", "--resamples", "200", "--out", &format!("audit_{p}"),
        ]);
    }
    same_bytes(dir, "audit_a", "audit_b", &[".txt", ".json"]);
    let report = fs::read_to_string(dir.join("audit_a.txt")).unwrap();
    assert!(report.contains("seed\t0") && report.contains("config sha256"));
    for v in ["P1", "P2", "P3", "P4", "P5", "CF"] {
        assert!(report.lines().any(|l| l.starts_with(&format!("{v}\t"))), "no summary row for {v}");
    }

    for r in ["corpus_a.json", "task_a.json", "psm_a.json", "audit_a.json"] {
        ok(dir, &["verify", r]);
    }
    let mut tampered = fs::read_to_string(dir.join("audit_a.txt")).unwrap();
    tampered.push('\n');
    fs::write(dir.join("audit_a.txt"), tampered).unwrap();
    assert_eq!(code(dir, &["verify", "audit_a.json"]), 2);
}

#[test]
fn synthetic_commands_are_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    for p in ["a", "b"] {
        ok(dir, &["synth", "parity", "--n", "2000", "--pairs", "200", "--out", &format!("parity_{p}")]);
        ok(dir, &["synth", "lipschitz", "--n", "500", "--out", &format!("lip_{p}")]);
    }
    same_bytes(dir, "parity_a", "parity_b", &[".txt", ".json"]);
    same_bytes(dir, "lip_a", "lip_b", &[".tsv", ".txt", ".json"]);
    let lip = fs::read_to_string(dir.join("lip_a.json")).unwrap();
    assert!(lip.contains("\"all_within_bound\": true"));
    ok(dir, &["verify", "lip_a.json"]);
}

#[test]
fn failures_map_to_exit_codes_and_leave_no_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["corpus", "--out", "c", "--n", "120"]);
    ok(dir, &["train", "--data", "c.jsonl", "--out", "t", "--epochs", "1"]);
    let before = files(dir);

    assert_eq!(code(dir, &["--help"]), 0);
    assert_eq!(code(dir, &["frobnicate"]), 1);
    assert_eq!(code(dir, &["train", "--data", "c.jsonl", "--out", "x", "--epochs", "0"]), 1);
    assert_eq!(code(dir, &["audit", "--model", "t.model.json", "--data", "c.jsonl", "--variants", "P2", "--out", "x"]), 1);
    assert_eq!(code(dir, &["audit", "--model", "t.model.json", "--data", "c.jsonl", "--variants", "P1,P1", "--out", "x"]), 1);
    assert_eq!(code(dir, &["audit", "--model", "t.model.json", "--data", "missing.jsonl", "--variants", "P1", "--out", "x"]), 2);
    assert_eq!(code(dir, &["train", "--data", "c.jsonl", "--out", "no/such/dir/x"]), 1);
    fs::write(dir.join("bad.jsonl"), "{\"id\": \"a\"}\n").unwrap();
    assert_eq!(code(dir, &["train", "--data", "bad.jsonl", "--out", "x"]), 2);
    assert_eq!(code(dir, &["train", "--data", "c.jsonl", "--out", "x", "--learning-rate", "1e300", "--epochs", "2"]), 3);

    let mut after = files(dir);
    after.retain(|f| f != "bad.jsonl");
    assert_eq!(before, after);
}

#[test]
fn audit_policies_differ_only_on_missing_records() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    ok(dir, &["corpus", "--out", "c", "--n", "150"]);
    ok(dir, &["train", "--data", "c.jsonl", "--out", "t", "--epochs", "1"]);
    for policy in ["exclude", "zero"] {
        ok(dir, &[
            "audit", "--model", "t.model.json", "--data", "c.jsonl", "--variants", "p4,cf", "--on-missing-gender",
            policy, "--out", policy,
        ]);
    }
    let rows = |name: &str| -> Vec<Vec<String>> {
        let text = fs::read_to_string(dir.join(format!("{name}.txt"))).unwrap();
        let start = text.lines().position(|l| l.starts_with("id\t")).unwrap();
        text.lines().skip(start + 1).map(|l| l.split('\t').map(String::from).collect()).collect()
    };
    let (excluded, zeroed) = (rows("exclude"), rows("zero"));
    assert_eq!(excluded.len(), 150);
    let mut missing = 0;
    for (e, z) in excluded.iter().zip(&zeroed) {
        for col in 1..=2 {
            if e[col] == "NA" {
                missing += 1;
                assert_eq!(z[col], "0.000000");
            } else {
                assert_eq!(e[col], z[col]);
            }
        }
    }
    assert!(missing > 0);
}
