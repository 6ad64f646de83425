//! JSONL corpus records, manifests and dataset statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cot::{chain_stats, ChainStats};
use crate::error::{Error, Result};
use crate::market::SplitName;
use crate::task::{TaskId, TaskSample};

pub const SCHEMA_VERSION: u32 = 1;

/// Serde adapter storing price lists as 2-decimal strings.
pub mod price_lists {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(lists: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<Vec<String>> = lists.iter().map(|l| l.iter().map(|p| format!("{p:.2}")).collect()).collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
        let text = Vec::<Vec<String>>::deserialize(d)?;
        text.into_iter()
            .map(|l| {
                l.into_iter()
                    .map(|p| p.parse::<f64>().map_err(|e| D::Error::custom(format!("bad price `{p}`: {e}"))))
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub schema_version: u32,
    pub id: String,
    #[serde(flatten)]
    pub sample: TaskSample,
    /// Rendered reasoning chain; absent in the answer-only variant.
    pub cot: Option<String>,
}

impl CorpusRecord {
    pub fn new(sample: TaskSample, cot: Option<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: record_id(&sample),
            sample,
            cot,
        }
    }
}

/// Stable id from (task, tickers, anchor date, split).
pub fn record_id(sample: &TaskSample) -> String {
    let mut h = Sha256::new();
    h.update(sample.task.slug());
    h.update(b"|");
    h.update(sample.tickers.join(","));
    h.update(b"|");
    h.update(sample.anchor_date.to_string());
    h.update(b"|");
    h.update(sample.split.slug());
    hex::encode(&h.finalize()[..8])
}

/// Per-split, per-task record counts and class counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub total: usize,
    pub counts: BTreeMap<SplitName, BTreeMap<TaskId, usize>>,
    pub class_counts: BTreeMap<SplitName, BTreeMap<TaskId, Vec<usize>>>,
    pub corpus_sha256: String,
    #[serde(default)]
    pub config_hash: Option<String>,
}

impl Manifest {
    pub fn from_records(records: &[CorpusRecord]) -> Self {
        let mut m = Manifest {
            schema_version: SCHEMA_VERSION,
            total: records.len(),
            ..Default::default()
        };
        for r in records {
            let s = &r.sample;
            *m.counts.entry(s.split).or_default().entry(s.task).or_default() += 1;
            let classes = m
                .class_counts
                .entry(s.split)
                .or_default()
                .entry(s.task)
                .or_insert_with(|| vec![0; s.task.n_choices()]);
            classes[s.gold.index()] += 1;
        }
        m
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Serialises records as JSONL bytes.
pub fn encode_corpus(records: &[CorpusRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(records.len() * 2048);
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes one JSON object per line and returns the manifest describing them.
pub fn write_corpus(records: &[CorpusRecord], path: &Path) -> Result<Manifest> {
    let bytes = encode_corpus(records)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))?;
    let mut manifest = Manifest::from_records(records);
    manifest.corpus_sha256 = sha256_hex(&bytes);
    Ok(manifest)
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode_corpus(BufReader::new(file))
}

/// Parses JSONL records. Errors carry the 1-based line number.
pub fn decode_corpus<R: BufRead>(reader: R) -> Result<Vec<CorpusRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Corpus {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| Error::Corpus {
            line: line_no,
            message: e.to_string(),
        })?;
        if let Some(v) = value.get("schema_version").and_then(|v| v.as_u64()) {
            if v != u64::from(SCHEMA_VERSION) {
                return Err(Error::SchemaVersion {
                    found: v as u32,
                    expected: SCHEMA_VERSION,
                });
            }
        }
        let record: CorpusRecord = serde_json::from_value(value).map_err(|e| Error::Corpus {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub n: usize,
    /// Percentage per answer letter, in letter order.
    pub percent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub total: usize,
    pub split_totals: BTreeMap<SplitName, usize>,
    pub distributions: BTreeMap<SplitName, BTreeMap<TaskId, ClassDistribution>>,
    pub chains: ChainStats,
}

pub fn corpus_report(records: &[CorpusRecord]) -> CorpusReport {
    let manifest = Manifest::from_records(records);
    let split_totals = manifest
        .counts
        .iter()
        .map(|(s, tasks)| (*s, tasks.values().sum()))
        .collect();
    let distributions = manifest
        .class_counts
        .iter()
        .map(|(split, tasks)| {
            let per_task = tasks
                .iter()
                .map(|(task, counts)| {
                    let n: usize = counts.iter().sum();
                    let percent = counts.iter().map(|c| 100.0 * *c as f64 / n as f64).collect();
                    (*task, ClassDistribution { n, percent })
                })
                .collect();
            (*split, per_task)
        })
        .collect();
    CorpusReport {
        total: records.len(),
        split_totals,
        distributions,
        chains: chain_stats(records),
    }
}

/// Class distribution of one split as an aligned text table.
pub fn distribution_table(report: &CorpusReport, split: SplitName) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<22}{:>7}{:>7}{:>7}{:>7}{:>7}{:>8}", "Task", "A", "B", "C", "D", "E", "n");
    if let Some(tasks) = report.distributions.get(&split) {
        for (task, dist) in tasks {
            let _ = write!(out, "{:<22}", task.to_string());
            for i in 0..5 {
                match dist.percent.get(i) {
                    Some(p) => {
                        let _ = write!(out, "{p:>7.1}");
                    }
                    None => {
                        let _ = write!(out, "{:>7}", "-");
                    }
                }
            }
            let _ = writeln!(out, "{:>8}", dist.n);
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;
    use crate::task::{Choice, SeedTrace};
    use chrono::NaiveDate;

    pub(crate) fn record(task: TaskId, ticker: &str, day: u32, gold: Choice) -> CorpusRecord {
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(day as u64);
        let sample = TaskSample {
            task,
            category: task.category(),
            tickers: vec![ticker.into()],
            split: SplitName::Train,
            window_start: d,
            anchor_date: d,
            horizon_days: 0,
            forward_dates: None,
            question: "q".into(),
            choices: task.choice_texts().iter().map(|s| s.to_string()).collect(),
            gold,
            windows: vec![vec![1.25, 3.5, 120.07]],
            forwards: vec![],
            aux: [("x".to_string(), 0.1 + 0.2)].into_iter().collect(),
            seed_trace: SeedTrace { seed: 1, draw: 2 },
        };
        CorpusRecord::new(sample, Some("<think>\nx\n</think>\n<answer>(A)</answer>".into()))
    }
}
