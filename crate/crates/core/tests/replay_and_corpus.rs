mod common;

use std::io::Write;

use finbench_core::corpus::{decode_corpus, encode_corpus, read_corpus, write_corpus, Manifest};
use finbench_core::eval::{run_model, score_run, ModelAdapter};
use finbench_core::task::{sample_from_prices, BenchConfig, TaskId};
use finbench_core::Error;
use proptest::prelude::*;

#[test]
fn replay_with_missing_ids_warns_and_scores_them_unparsed() {
    let recs = common::tiny_build().records;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("responses.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    for r in &recs[3..] {
        let line = serde_json::json!({ "id": r.id, "response": format!("<answer>({})</answer>", r.sample.gold.letter()) });
        writeln!(f, "{line}").unwrap();
    }
    drop(f);
    let out = run_model(&ModelAdapter::FileReplay(path), &recs, None).unwrap();
    assert_eq!(out.transcript.len(), recs.len());
    assert_eq!(out.warnings.len(), 1);
    for r in &recs[..3] {
        assert!(out.warnings[0].contains(&r.id));
    }
    let report = score_run("replay", &recs, &out.responses());
    let parsed: usize = report.tasks.values().map(|s| s.n_parsed).sum();
    let correct: usize = report.tasks.values().map(|s| s.n_correct).sum();
    assert_eq!(parsed, recs.len() - 3);
    assert_eq!(correct, recs.len() - 3);
}

#[test]
fn corpus_file_round_trip_and_manifest() {
    let recs = common::tiny_build().records;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let manifest = write_corpus(&recs, &path).unwrap();
    assert_eq!(read_corpus(&path).unwrap(), recs);
    assert_eq!(manifest.total, recs.len());
    let counted: usize = manifest.counts.values().flat_map(|t| t.values()).sum();
    assert_eq!(counted, recs.len());
    for (split, tasks) in &manifest.class_counts {
        for (task, classes) in tasks {
            assert_eq!(classes.iter().sum::<usize>(), manifest.counts[split][task]);
        }
    }
    let mpath = dir.path().join("manifest.json");
    manifest.write(&mpath).unwrap();
    assert_eq!(Manifest::read(&mpath).unwrap(), manifest);
}

#[test]
fn decode_errors_name_the_line() {
    let recs = common::tiny_build().records;
    let mut bytes = encode_corpus(&recs[..2]).unwrap();
    bytes.extend_from_slice(b"{not json}\n");
    match decode_corpus(&bytes[..]) {
        Err(Error::Corpus { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
    let mut v: serde_json::Value = serde_json::to_value(&recs[0]).unwrap();
    v["schema_version"] = 99.into();
    let text = format!("{v}\n");
    assert!(matches!(decode_corpus(text.as_bytes()), Err(Error::SchemaVersion { found: 99, .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn records_survive_encoding(cents in prop::collection::vec(1u32..100_000, 120), cot in proptest::option::of(".{0,200}")) {
        let w: Vec<f64> = cents.iter().map(|c| *c as f64 / 100.0).collect();
        let sample = sample_from_prices(TaskId::TrendDirection, &["T"], vec![w], Vec::new(), &BenchConfig::default())
            .unwrap()
            .unwrap();
        let rec = finbench_core::corpus::CorpusRecord::new(sample, cot);
        let bytes = encode_corpus(std::slice::from_ref(&rec)).unwrap();
        let back = decode_corpus(&bytes[..]).unwrap();
        prop_assert_eq!(&back[0], &rec);
        prop_assert_eq!(encode_corpus(&back).unwrap(), bytes);
    }
}
