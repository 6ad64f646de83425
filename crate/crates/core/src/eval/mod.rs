//! Answer extraction, scoring and report tables.

mod adapter;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusRecord;
use crate::error::{Error, Result};
use crate::market::SplitName;
use crate::task::{Choice, TaskId};

pub use adapter::{
    load_replay, read_transcript, run_model, write_transcript, HttpConfig, ModelAdapter, RunOutcome, TranscriptEntry,
};

/// Result of scanning a response for answer tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Extraction {
    pub choice: Option<Choice>,
    /// Number of complete `<answer>…</answer>` spans.
    pub tag_count: usize,
}

fn parse_inner(inner: &str) -> Option<Choice> {
    let s = inner.trim();
    let body = match s.strip_prefix('(') {
        Some(rest) => rest.strip_suffix(')')?,
        None => s.strip_suffix(')').unwrap_or(s),
    };
    let mut chars = body.trim().chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Choice::from_letter(c),
        _ => None,
    }
}

/// Finds the last `<answer>…</answer>` span and reads a letter from it.
/// Accepts `(B)`, `B` and `B)`; anything else is unparsed.
pub fn extract_answer(text: &str) -> Extraction {
    const OPEN: &str = "<answer>";
    const CLOSE: &str = "</answer>";
    let mut spans = Vec::new();
    let mut pos = 0;
    while let Some(i) = text[pos..].find(OPEN) {
        let start = pos + i + OPEN.len();
        let Some(j) = text[start..].find(CLOSE) else { break };
        spans.push(&text[start..start + j]);
        pos = start + j + CLOSE.len();
    }
    Extraction {
        choice: spans.last().and_then(|s| parse_inner(s)),
        tag_count: spans.len(),
    }
}

/// One scored record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub task: TaskId,
    pub gold: Choice,
    pub extracted: Option<Choice>,
    pub tag_count: usize,
}

impl Outcome {
    /// A direct answer with no text to parse (forecast baselines).
    pub fn parsed(record: &CorpusRecord, choice: Choice) -> Self {
        Self {
            task: record.sample.task,
            gold: record.sample.gold,
            extracted: Some(choice),
            tag_count: 1,
        }
    }

    /// Letters past the record's option list count as unparsed.
    pub fn from_response(record: &CorpusRecord, response: &str) -> Self {
        let e = extract_answer(response);
        let n = record.sample.choices.len();
        Self {
            task: record.sample.task,
            gold: record.sample.gold,
            extracted: e.choice.filter(|c| c.index() < n),
            tag_count: e.tag_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScore {
    pub n: usize,
    pub n_parsed: usize,
    pub n_correct: usize,
    /// Responses with more than one answer span.
    pub n_multi_tag: usize,
    /// Correct over all samples, in [0, 1].
    pub accuracy: f64,
    /// Parsed over all samples, in [0, 1].
    pub success_rate: f64,
}

/// Accuracy and success rate of one model on one corpus split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    /// `None` when the scored records span several splits.
    pub split: Option<SplitName>,
    pub tasks: BTreeMap<TaskId, TaskScore>,
    pub not_applicable: Vec<TaskId>,
    /// Unweighted mean of per-task accuracies.
    pub average_accuracy: f64,
    pub average_success_rate: f64,
    #[serde(default)]
    pub config: serde_json::Value,
    #[serde(default)]
    pub config_hash: Option<String>,
}

fn common_split(records: &[CorpusRecord]) -> Option<SplitName> {
    let first = records.first()?.sample.split;
    records.iter().all(|r| r.sample.split == first).then_some(first)
}

impl EvalReport {
    pub fn from_outcomes(
        model: impl Into<String>,
        records: &[CorpusRecord],
        outcomes: &[Outcome],
        not_applicable: Vec<TaskId>,
    ) -> Self {
        let mut tasks: BTreeMap<TaskId, TaskScore> = BTreeMap::new();
        for o in outcomes {
            let s = tasks.entry(o.task).or_insert(TaskScore {
                n: 0,
                n_parsed: 0,
                n_correct: 0,
                n_multi_tag: 0,
                accuracy: 0.0,
                success_rate: 0.0,
            });
            s.n += 1;
            s.n_parsed += o.extracted.is_some() as usize;
            s.n_correct += (o.extracted == Some(o.gold)) as usize;
            s.n_multi_tag += (o.tag_count > 1) as usize;
        }
        for s in tasks.values_mut() {
            s.accuracy = s.n_correct as f64 / s.n as f64;
            s.success_rate = s.n_parsed as f64 / s.n as f64;
        }
        let avg = |f: fn(&TaskScore) -> f64| {
            if tasks.is_empty() {
                0.0
            } else {
                tasks.values().map(f).sum::<f64>() / tasks.len() as f64
            }
        };
        let average_accuracy = avg(|s| s.accuracy);
        let average_success_rate = avg(|s| s.success_rate);
        Self {
            model: model.into(),
            split: common_split(records),
            tasks,
            not_applicable,
            average_accuracy,
            average_success_rate,
            config: serde_json::Value::Null,
            config_hash: None,
        }
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Scores free-text responses keyed by record id. Missing ids are unparsed.
pub fn score_run(model: &str, records: &[CorpusRecord], responses: &BTreeMap<String, String>) -> EvalReport {
    let outcomes: Vec<Outcome> = records
        .iter()
        .map(|r| Outcome::from_response(r, responses.get(&r.id).map_or("", String::as_str)))
        .collect();
    EvalReport::from_outcomes(model, records, &outcomes, Vec::new())
}

/// Uniform random letter per record over its own option count.
pub fn random_baseline(records: &[CorpusRecord], seed: u64) -> EvalReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes: Vec<Outcome> = records
        .iter()
        .map(|r| {
            let k = rng.random_range(0..r.sample.choices.len());
            Outcome::parsed(r, Choice::from_index(k).expect("at most five options"))
        })
        .collect();
    let mut report = EvalReport::from_outcomes("Random", records, &outcomes, Vec::new());
    report.config = serde_json::json!({ "seed": seed });
    report
}

/// Which number a comparison table shows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Accuracy,
    SuccessRate,
}

/// Plain-text table: one row per report, one column per task, then `Avg.`.
/// Percentages with one decimal; `--` for tasks a report does not cover.
pub fn comparison_table(reports: &[EvalReport], metric: Metric) -> String {
    let tasks: Vec<TaskId> = TaskId::ALL
        .iter()
        .copied()
        .filter(|t| reports.iter().any(|r| r.tasks.contains_key(t)))
        .collect();
    let name_w = reports.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
    let mut header = format!("{:<name_w$}", "Model");
    for t in &tasks {
        header.push_str(&format!(" {:>6}", t.short_name()));
    }
    header.push_str(&format!(" {:>6}", "Avg."));
    let mut out = header.clone();
    out.push('\n');
    out.push_str(&"-".repeat(header.len()));
    out.push('\n');
    for r in reports {
        out.push_str(&format!("{:<name_w$}", r.model));
        for t in &tasks {
            let cell = r.tasks.get(t).map_or("--".to_string(), |s| {
                let v = match metric {
                    Metric::Accuracy => s.accuracy,
                    Metric::SuccessRate => s.success_rate,
                };
                format!("{:.1}", 100.0 * v)
            });
            out.push_str(&format!(" {cell:>6}"));
        }
        let avg = match metric {
            Metric::Accuracy => r.average_accuracy,
            Metric::SuccessRate => r.average_success_rate,
        };
        out.push_str(&format!(" {:>6.1}\n", 100.0 * avg));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tests_support::record;

    #[test]
    fn extraction_formats() {
        assert_eq!(extract_answer("<think>x</think><answer>(B)</answer>").choice, Some(Choice::B));
        assert_eq!(extract_answer("<answer>C</answer>").choice, Some(Choice::C));
        assert_eq!(extract_answer("<answer> D) </answer>").choice, Some(Choice::D));
        assert_eq!(extract_answer("the answer is B").choice, None);
        assert_eq!(extract_answer("<answer>(B</answer>").choice, None);
        assert_eq!(extract_answer("<answer>BC</answer>").choice, None);
        assert_eq!(extract_answer("<answer>(A)").choice, None);
    }

    #[test]
    fn last_tag_wins() {
        let e = extract_answer("<answer>(A)</answer> wait <answer>(C)</answer>");
        assert_eq!(e.choice, Some(Choice::C));
        assert_eq!(e.tag_count, 2);
    }

    fn corpus() -> Vec<CorpusRecord> {
        let mut v = Vec::new();
        for (i, t) in TaskId::ALL.iter().enumerate() {
            for d in 0..4u32 {
                v.push(record(*t, "AAA", 10 * i as u32 + d, Choice::from_index(d as usize % 2).unwrap()));
            }
        }
        v
    }

    #[test]
    fn gold_echo_scores_full_marks() {
        let recs = corpus();
        let responses = recs
            .iter()
            .map(|r| (r.id.clone(), format!("<answer>({})</answer>", r.sample.gold)))
            .collect();
        let rep = score_run("gold", &recs, &responses);
        assert_eq!(rep.tasks.len(), 10);
        assert!((rep.average_accuracy - 1.0).abs() < 1e-12);
        assert!((rep.average_success_rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unparsed_scores_zero() {
        let recs = corpus();
        let rep = score_run("mute", &recs, &BTreeMap::new());
        assert_eq!(rep.average_accuracy, 0.0);
        assert_eq!(rep.average_success_rate, 0.0);
    }

    #[test]
    fn out_of_range_letter_is_unparsed() {
        let recs = vec![record(TaskId::EventResponse, "AAA", 1, Choice::A)];
        let responses = [(recs[0].id.clone(), "<answer>(C)</answer>".to_string())].into();
        let rep = score_run("m", &recs, &responses);
        assert_eq!(rep.tasks[&TaskId::EventResponse].n_parsed, 0);
    }

    #[test]
    fn table_has_avg_column() {
        let recs = corpus();
        let rep = random_baseline(&recs, 1);
        let table = comparison_table(&[rep.clone(), rep], Metric::Accuracy);
        assert!(table.lines().next().unwrap().ends_with("Avg."));
        assert_eq!(table.lines().count(), 4);
    }

    proptest::proptest! {
        #[test]
        fn accuracy_never_exceeds_success_rate(picks in proptest::collection::vec(0usize..8, 40)) {
            let recs = corpus();
            let responses = recs
                .iter()
                .zip(&picks)
                .map(|(r, p)| {
                    let text = match p {
                        0..=4 => format!("<answer>({})</answer>", Choice::from_index(*p).unwrap()),
                        5 => "no tag".to_string(),
                        6 => "<answer>maybe</answer>".to_string(),
                        _ => format!("<answer>(A)</answer><answer>{}</answer>", r.sample.gold),
                    };
                    (r.id.clone(), text)
                })
                .collect();
            let rep = score_run("p", &recs, &responses);
            let mean: f64 = rep.tasks.values().map(|s| s.accuracy).sum::<f64>() / rep.tasks.len() as f64;
            proptest::prop_assert!((mean - rep.average_accuracy).abs() < 1e-9);
            for s in rep.tasks.values() {
                proptest::prop_assert!(s.n_correct <= s.n_parsed && s.accuracy <= s.success_rate);
            }
            proptest::prop_assert_eq!(rep.clone(), score_run("p", &recs, &responses));
        }
    }
}
