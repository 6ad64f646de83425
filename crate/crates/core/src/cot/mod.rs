//! Reasoning-chain rendering: Compute-in-CoT for assessment samples and
//! Scenario-Aware CoT for prediction samples.

mod compute;
mod scenario;
mod templates;
mod verify;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusRecord;
use crate::error::{Error, Result};
use crate::task::{Choice, TaskSample};

pub use compute::render_compute_cot;
pub use scenario::{render_scenario_cot, scenario_section};
pub use templates::{ScenarioTemplate, ScenarioTemplates};
pub use verify::{inject_fault, verify_arithmetic, verify_chain, ArithmeticCheck};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CotStyle {
    ComputeInCot,
    ScenarioAware,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Extract,
    Compute,
    Classify,
    ScenarioAnalysis,
    Assessment,
    Judgment,
}

impl CotStyle {
    pub fn phases(self) -> &'static [Phase] {
        match self {
            CotStyle::ComputeInCot => &[Phase::Extract, Phase::Compute, Phase::Classify],
            CotStyle::ScenarioAware => &[
                Phase::Extract,
                Phase::Compute,
                Phase::ScenarioAnalysis,
                Phase::Assessment,
                Phase::Judgment,
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CotChain {
    pub style: CotStyle,
    pub phases: Vec<(Phase, Vec<String>)>,
    /// Every number printed in the chain, keyed by what it measures.
    pub quantities: BTreeMap<String, f64>,
    pub final_choice: Choice,
    pub rendered: String,
}

impl CotChain {
    fn assemble(style: CotStyle, phases: Vec<(Phase, Vec<String>)>, quantities: BTreeMap<String, f64>, final_choice: Choice) -> Self {
        debug_assert_eq!(phases.iter().map(|p| p.0).collect::<Vec<_>>(), style.phases());
        let mut body = String::new();
        for line in phases.iter().flat_map(|(_, lines)| lines) {
            if line.starts_with("Step ") && !body.is_empty() {
                body.push('\n');
            }
            body.push_str(line);
            body.push('\n');
        }
        let rendered = format!("<think>\n{body}</think>\n<answer>({})</answer>", final_choice.letter());
        Self {
            style,
            phases,
            quantities,
            final_choice,
            rendered,
        }
    }

    pub fn word_count(&self) -> usize {
        word_count(&self.rendered)
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Renders the chain appropriate to the sample's task.
pub fn render_chain(sample: &TaskSample, templates: &ScenarioTemplates) -> Result<CotChain> {
    if sample.task.is_prediction() {
        render_scenario_cot(sample, templates)
    } else {
        render_compute_cot(sample)
    }
}

/// Fixed-point formatting that never prints a negative zero.
pub fn format_fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// `0.045` with one decimal prints as `4.5%`.
pub fn format_pct(frac: f64, decimals: usize) -> String {
    format!("{}%", format_fixed(frac * 100.0, decimals))
}

/// Like [`format_pct`] with an explicit `+` on non-negative values.
pub fn format_signed_pct(frac: f64, decimals: usize) -> String {
    let s = format_pct(frac, decimals);
    if s.starts_with('-') {
        s
    } else {
        format!("+{s}")
    }
}

/// Formats numbers for a chain and records each printed value.
#[derive(Debug, Default)]
pub(crate) struct Printer {
    pub quantities: BTreeMap<String, f64>,
}

impl Printer {
    fn record(&mut self, key: &str, text: &str) {
        let v: f64 = text.trim_end_matches('%').trim_start_matches('+').parse().expect("printed number parses");
        self.quantities.insert(key.to_string(), v);
    }

    pub fn fixed(&mut self, key: &str, value: f64, decimals: usize) -> String {
        let s = format_fixed(value, decimals);
        self.record(key, &s);
        s
    }

    pub fn pct(&mut self, key: &str, frac: f64, decimals: usize) -> String {
        let s = format_pct(frac, decimals);
        self.record(key, &s);
        s
    }

    pub fn signed_pct(&mut self, key: &str, frac: f64, decimals: usize) -> String {
        let s = format_signed_pct(frac, decimals);
        self.record(key, &s);
        s
    }

    pub fn int(&mut self, key: &str, n: usize) -> String {
        self.quantities.insert(key.to_string(), n as f64);
        n.to_string()
    }
}

/// Checks the `<think>…</think><answer>(L)</answer>` wrapper, each tag exactly
/// once and in order, and returns the answer letter.
pub fn check_wrapper(text: &str) -> Result<Choice> {
    let bad = |m: &str| Error::Render(format!("wrapper: {m}"));
    let t = text.trim();
    for tag in ["<think>", "</think>", "<answer>", "</answer>"] {
        if t.matches(tag).count() != 1 {
            return Err(bad(&format!("expected exactly one {tag}")));
        }
    }
    if !t.starts_with("<think>") || !t.ends_with("</answer>") {
        return Err(bad("chain must open with <think> and close with </answer>"));
    }
    let close = t.find("</think>").unwrap_or(0);
    let open = t.find("<answer>").unwrap_or(0);
    if open < close || !t[close + "</think>".len()..open].trim().is_empty() {
        return Err(bad("answer must directly follow </think>"));
    }
    let inner = &t[open + "<answer>".len()..t.len() - "</answer>".len()];
    let mut chars = inner.chars();
    match (chars.next(), chars.next(), chars.next(), chars.next()) {
        (Some('('), Some(c), Some(')'), None) => Choice::from_letter(c).ok_or_else(|| bad("answer is not a letter")),
        _ => Err(bad("answer must be a parenthesised letter")),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StyleStats {
    pub count: usize,
    pub mean_words: f64,
    pub median_words: f64,
}

impl StyleStats {
    fn from_counts(mut counts: Vec<usize>) -> Self {
        if counts.is_empty() {
            return Self::default();
        }
        counts.sort_unstable();
        let n = counts.len();
        let median = if n % 2 == 1 {
            counts[n / 2] as f64
        } else {
            (counts[n / 2 - 1] + counts[n / 2]) as f64 / 2.0
        };
        Self {
            count: n,
            mean_words: counts.iter().sum::<usize>() as f64 / n as f64,
            median_words: median,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub compute_in_cot: StyleStats,
    pub scenario_aware: StyleStats,
    /// Mean prediction-chain words over mean assessment-chain words.
    pub length_ratio: Option<f64>,
}

/// Word-count statistics of the rendered chains in a corpus.
pub fn chain_stats(records: &[CorpusRecord]) -> ChainStats {
    let mut compute = Vec::new();
    let mut scenario = Vec::new();
    for r in records {
        if let Some(cot) = &r.cot {
            if r.sample.task.is_prediction() {
                scenario.push(word_count(cot));
            } else {
                compute.push(word_count(cot));
            }
        }
    }
    let compute_in_cot = StyleStats::from_counts(compute);
    let scenario_aware = StyleStats::from_counts(scenario);
    let length_ratio =
        (compute_in_cot.count > 0 && scenario_aware.count > 0).then(|| scenario_aware.mean_words / compute_in_cot.mean_words);
    ChainStats {
        compute_in_cot,
        scenario_aware,
        length_ratio,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(format_pct(0.045, 1), "4.5%");
        assert_eq!(format_signed_pct(0.0035, 2), "+0.35%");
        assert_eq!(format_signed_pct(-0.0075, 2), "-0.75%");
        assert_eq!(format_fixed(-0.00001, 1), "0.0");
        assert_eq!(format_signed_pct(-0.00001, 1), "+0.0%");
    }

    #[test]
    fn wrapper_grammar() {
        assert_eq!(check_wrapper("<think>\nx\n</think>\n<answer>(B)</answer>").unwrap(), Choice::B);
        assert!(check_wrapper("<think>x</think><answer>B</answer>").is_err());
        assert!(check_wrapper("<think>x</think>junk<answer>(B)</answer>").is_err());
        assert!(check_wrapper("<think>x</think><answer>(B)</answer><answer>(C)</answer>").is_err());
        assert!(check_wrapper("x<think>x</think><answer>(B)</answer>").is_err());
    }

    #[test]
    fn stats_of_empty_and_single() {
        let s = chain_stats(&[]);
        assert_eq!(s.compute_in_cot.count, 0);
        assert!(s.length_ratio.is_none());
        let st = StyleStats::from_counts(vec![7]);
        assert_eq!((st.mean_words, st.median_words), (7.0, 7.0));
        let st = StyleStats::from_counts(vec![1, 2, 3, 10]);
        assert_eq!(st.median_words, 2.5);
    }
}

#[cfg(test)]
pub(crate) mod tests_support {
    use chrono::NaiveDate;

    use crate::market::SplitName;
    use crate::task::label::label_task;
    use crate::task::{BenchConfig, SeedTrace, TaskId, TaskSample};

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    /// Labels hand-built windows into a sample (panics if skipped).
    pub fn sample_with_forward(task: TaskId, windows: Vec<Vec<f64>>, forwards: Vec<Vec<f64>>) -> TaskSample {
        let cfg = BenchConfig::default();
        let labeled = label_task(task, &refs(&windows), &refs(&forwards), &cfg)
            .unwrap()
            .expect("fixture passes inclusion rules");
        let d = NaiveDate::from_ymd_opt(2020, 6, 1).unwrap();
        let tickers = ["AAA", "BBB"][..windows.len()].iter().map(|s| s.to_string()).collect();
        TaskSample {
            task,
            category: task.category(),
            tickers,
            split: SplitName::TestA,
            window_start: d,
            anchor_date: d,
            horizon_days: task.horizon(&cfg),
            forward_dates: None,
            question: String::new(),
            choices: task.choice_texts().iter().map(|s| s.to_string()).collect(),
            gold: labeled.gold,
            windows,
            forwards,
            aux: labeled.aux,
            seed_trace: SeedTrace { seed: 0, draw: 0 },
        }
    }

    pub fn sample_from_window(task: TaskId, windows: Vec<Vec<f64>>) -> TaskSample {
        sample_with_forward(task, windows, Vec::new())
    }
}
