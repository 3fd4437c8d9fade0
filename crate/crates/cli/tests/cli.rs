use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sdr_core::synthetic::{generate, SyntheticSpec};

fn sdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdr"))
        .args(args)
        .env("SDR_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn fixture(dir: &Path) -> PathBuf {
    let spec = SyntheticSpec {
        topics: 3,
        docs: (25, 35),
        relevant: (3, 5),
        vocab_size: 90,
        doc_len: (15, 30),
        ..Default::default()
    };
    generate(&spec).write_to(dir).unwrap();
    let cfg = dir.join("config.toml");
    fs::write(
        &cfg,
        format!(
            "corpus = {:?}\ntopics = {:?}\nqrels = {:?}\nlexicon = {:?}\noutput_dir = {:?}\ncutoffs = [5, 10]\n",
            dir.join("corpus.jsonl"),
            dir.join("topics.txt"),
            dir.join("qrels.txt"),
            dir.join("lexicon.txt"),
            dir.join("out"),
        ),
    )
    .unwrap();
    cfg
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((
                    p.strip_prefix(dir).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn eval_prints_map() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("r.run");
    let qrels = dir.path().join("q.txt");
    fs::write(&run, "T1 Q0 a 1 3 x\nT1 Q0 b 2 2 x\nT1 Q0 c 3 1 x\n").unwrap();
    fs::write(&qrels, "T1 0 a 1\nT1 0 b 0\nT1 0 c 1\n").unwrap();
    let out = sdr(&[
        "eval",
        "--run",
        run.to_str().unwrap(),
        "--qrels",
        qrels.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("topic_id,seed_or_window,metric,value\n"));
    let map: f64 = text
        .lines()
        .find(|l| l.starts_with("T1,x,MAP,"))
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((map - 0.8333).abs() < 1e-4);
}

#[test]
fn rank_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path());
    let cfg = cfg.to_str().unwrap();
    let out_dir = dir.path().join("out");

    let first = sdr(&["rank", "-c", cfg, "--set", "threads=1"]);
    assert!(
        first.status.success(),
        "{}",
        String::from_utf8_lossy(&first.stderr)
    );
    let summary: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(summary["topics_processed"], 3);
    let a = read_tree(&out_dir);
    fs::remove_dir_all(&out_dir).unwrap();

    let second = sdr(&["rank", "-c", cfg, "--set", "threads=3"]);
    assert!(second.status.success());
    assert_eq!(a, read_tree(&out_dir));
    assert!(a
        .iter()
        .any(|(p, _)| p.ends_with("runs/sdr-bow/metrics.csv")));
}

#[test]
fn missing_embeddings_is_a_field_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path());
    let out = sdr(&[
        "rank",
        "-c",
        cfg.to_str().unwrap(),
        "--set",
        "method=sdr+aes",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let err: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(err["status"], "error");
    assert_eq!(err["kind"], "config");
    assert_eq!(err["field"], "embeddings");
}

#[test]
fn env_override_applies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_sdr"))
        .args(["rank", "-c", cfg.to_str().unwrap()])
        .env("SDR_LOG", "warn")
        .env("SDR_METHOD", "qlm")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("out/runs/qlm-bow/T000.run").is_file());
}

#[test]
fn multi_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path());
    let out = sdr(&["multi", "-c", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = dir.path().join("out/runs");
    let cmp = sdr(&[
        "compare",
        runs.join("multi-sdr-bow/metrics.csv").to_str().unwrap(),
        runs.join("oracle-sdr-bow/metrics.csv").to_str().unwrap(),
        "--labels",
        "multi",
        "oracle",
    ]);
    assert!(cmp.status.success());
    let text = String::from_utf8(cmp.stdout).unwrap();
    assert!(text.starts_with("method_a,method_b,metric,t,p,p_adjusted,significant\n"));
    assert!(text.lines().skip(1).all(|l| l.starts_with("multi,oracle,")));
}

#[test]
fn analyze_writes_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path());
    let out = sdr(&[
        "analyze",
        "-c",
        cfg.to_str().unwrap(),
        "--set",
        "representation=boc",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir
        .path()
        .join("out/analysis/intra_similarity-boc.csv")
        .is_file());
}

#[test]
fn bad_run_file_fails_with_summary() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("r.run");
    let qrels = dir.path().join("q.txt");
    fs::write(&run, "T1 Q0 a 1 3 x\nT1 Q0 a 2 2 x\n").unwrap();
    fs::write(&qrels, "T1 0 a 1\n").unwrap();
    let out = sdr(&[
        "eval",
        "--run",
        run.to_str().unwrap(),
        "--qrels",
        qrels.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_str(
        String::from_utf8(out.stderr)
            .unwrap()
            .lines()
            .last()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(err["status"], "error");
}
