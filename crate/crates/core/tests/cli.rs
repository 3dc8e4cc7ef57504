//! The `mate` binary: exit codes, JSON output and on-disk effects.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use mate::bench::{BenchConfig, SyntheticSpec};
use serde_json::Value;

fn mate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mate")).args(args).env_remove("MATE_INDEX_DIR").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn build(dir: &Path, extra: &[&str]) -> Value {
    let corpus = common::data_dir().join("corpus");
    let mut args = vec!["index", "build", "--corpus", p(&corpus), "--index", p(dir)];
    args.extend_from_slice(extra);
    json(&mate(&args))
}

fn query(dir: &Path, extra: &[&str]) -> Output {
    let q = common::data_dir().join("query.csv");
    let mut args = vec!["query", "--index", p(dir), "--query", p(&q), "--key", "F. Name,L. Name,Country"];
    args.extend_from_slice(extra);
    mate(&args)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn build_prints_summary_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let s = build(&a, &[]);
    assert_eq!((s["beta"].as_u64(), s["length_bits"].as_u64()), (Some(3), Some(17)));
    assert_eq!(s["tables"], 3);
    assert_eq!(s["hasher"], "xash-128");
    build(&b, &[]);
    assert_eq!(files(&a), files(&b));
    let s = build(&tmp.path().join("c"), &["--hasher", "bf", "--bits", "512"]);
    assert_eq!((s["beta"].as_u64(), s["length_bits"].as_u64()), (Some(13), Some(31)));
}

#[test]
fn empty_corpus_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = mate(&["index", "build", "--corpus", p(&empty), "--index", p(&tmp.path().join("i"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no tables"));
}

#[test]
fn query_modes_agree_and_bad_input_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("i");
    build(&dir, &[]);
    let run = json(&query(&dir, &["-k", "1"]));
    assert_eq!(run["results"][0]["j"], 5);
    assert_eq!(run["results"][0]["table_id"], 0);
    assert_eq!(run["mode"], "mate");
    for mode in ["scr", "mcr", "oracle"] {
        let other = json(&query(&dir, &["-k", "3", "--mode", mode]));
        let js: Vec<&Value> = other["results"].as_array().unwrap().iter().map(|r| &r["j"]).collect();
        assert_eq!(js, [&Value::from(5), &Value::from(2)], "{mode}");
    }
    assert_eq!(query(&dir, &["-k", "0"]).status.code(), Some(2));
    assert_eq!(query(&dir, &["--mode", "fast"]).status.code(), Some(2));
    let q = common::data_dir().join("query.csv");
    let bad = mate(&["query", "--index", p(&dir), "--query", p(&q), "--key", "Surname"]);
    assert_eq!(bad.status.code(), Some(2));
    let out = tmp.path().join("run.json");
    assert!(query(&dir, &["-k", "1", "--output", p(&out)]).status.success());
    let saved: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(saved["results"][0]["j"], 5);
}

#[test]
fn index_dir_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("i");
    build(&dir, &[]);
    let q = common::data_dir().join("query.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_mate"))
        .args(["query", "--query", p(&q), "--key", "0,1,2", "-k", "1"])
        .env("MATE_INDEX_DIR", &dir)
        .output()
        .unwrap();
    assert_eq!(json(&out)["results"][0]["j"], 5);
}

#[test]
fn frequency_mismatch_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("i");
    let mut order: Vec<String> = mate::xash::DEFAULT_FREQUENCY_ORDER.iter().map(|c| c.to_string()).collect();
    order.reverse();
    let freq = tmp.path().join("freq.json");
    std::fs::write(&freq, serde_json::to_string(&order).unwrap()).unwrap();
    build(&dir, &["--frequency", p(&freq)]);
    assert_eq!(query(&dir, &["-k", "1"]).status.code(), Some(3));
    assert_eq!(json(&query(&dir, &["-k", "1", "--frequency", p(&freq)]))["results"][0]["j"], 5);
}

#[test]
fn update_applies_all_or_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("i");
    build(&dir, &[]);
    let before = files(&dir);

    let bad = tmp.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"op\":\"delete_row\",\"table_id\":0,\"row_id\":1}\n{\"op\":\"delete_row\",\n").unwrap();
    let out = mate(&["index", "update", "--index", p(&dir), "--edits", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(files(&dir), before);

    let missing = tmp.path().join("missing.jsonl");
    std::fs::write(&missing, "{\"op\":\"delete_row\",\"table_id\":0,\"row_id\":1}\n{\"op\":\"delete_table\",\"table_id\":9}\n").unwrap();
    let out = mate(&["index", "update", "--index", p(&dir), "--edits", p(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    assert_eq!(files(&dir), before);

    let edits = common::data_dir().join("edits.jsonl");
    let s = json(&mate(&["index", "update", "--index", p(&dir), "--edits", p(&edits)]));
    assert_eq!(s["applied"], 3);
    assert_eq!(s["per_kind"]["delete_column"], 1);
    assert!(!tmp.path().join("i.staged").exists() && !tmp.path().join("i.retired").exists());

    // the evolved index answers like one built from the edited corpus
    let evolved = mate::Index::load(&dir).unwrap();
    let rebuilt = mate::Index::build(evolved.catalog().clone(), *evolved.hasher()).unwrap();
    assert_eq!(evolved.diff(&rebuilt), None);
    assert_eq!(evolved.lookup("recife").len(), 1);
    let run = json(&query(&dir, &["-k", "3"]));
    let js: Vec<u64> = run["results"].as_array().unwrap().iter().map(|r| r["j"].as_u64().unwrap()).collect();
    assert_eq!(js, vec![5, 3]);
}

#[test]
fn oracle_reads_csv_directly() {
    let q = common::data_dir().join("query.csv");
    let corpus = common::data_dir().join("corpus");
    let run = json(&mate(&["oracle", "--corpus", p(&corpus), "--query", p(&q), "--key", "0,1,2", "-k", "2"]));
    assert_eq!(run["mode"], "oracle");
    assert_eq!(run["results"][1]["j"], 2);
    let out = mate(&["oracle", "--corpus", p(&corpus), "--query", p(&q), "--key", "0,1,2", "--budget", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_reports_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let config = BenchConfig {
        spec: SyntheticSpec::tiny(1),
        seeds: vec![1, 2],
        k: 3,
        ..BenchConfig::default()
    };
    let spec = tmp.path().join("bench.json");
    std::fs::write(&spec, serde_json::to_string(&config).unwrap()).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let s = json(&mate(&["bench", "--spec", p(&spec), "--out", p(&a), "--ablate"]));
    assert_eq!(s["ablation"].as_array().unwrap().len(), 6);
    assert!(!s["cells"].as_array().unwrap().is_empty());
    json(&mate(&["bench", "--spec", p(&spec), "--out", p(&b), "--ablate"]));
    for f in ["report.json", "report.csv", "runs.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert!(a.join("timings.csv").exists());
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\"k\": 0}").unwrap();
    assert_eq!(mate(&["bench", "--spec", p(&bad), "--out", p(&a)]).status.code(), Some(2));
}
