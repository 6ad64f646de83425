//! The ten benchmark tasks: identities, generation parameters, labelling,
//! candidate generation and class balancing.

mod balance;
mod generate;
pub mod label;
mod prompt;

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::SplitName;
use crate::math::StdKind;

pub use balance::{balance_and_cap, BalanceReport, HasGold};
pub use generate::{generate_task, job_seed, materialize, sample_from_prices, Candidate, GenerationReport, Leg, SeriesPool};
pub use label::{Labeled, PredictionContext};
pub use prompt::render_prompt;

/// Capability category: assessment/prediction crossed with single/multi stock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "AS")]
    AssessmentSingle,
    #[serde(rename = "AM")]
    AssessmentMulti,
    #[serde(rename = "PS")]
    PredictionSingle,
    #[serde(rename = "PM")]
    PredictionMulti,
}

impl Category {
    pub fn abbr(self) -> &'static str {
        match self {
            Category::AssessmentSingle => "AS",
            Category::AssessmentMulti => "AM",
            Category::PredictionSingle => "PS",
            Category::PredictionMulti => "PM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    Drawdown,
    VolatilityRegime,
    TrendDirection,
    Correlation,
    EventResponse,
    SupportResistance,
    DrawdownRecovery,
    VolatilityForecast,
    RelativePerformance,
    PairConvergence,
}

impl TaskId {
    pub const ALL: [TaskId; 10] = [
        TaskId::Drawdown,
        TaskId::VolatilityRegime,
        TaskId::TrendDirection,
        TaskId::Correlation,
        TaskId::EventResponse,
        TaskId::SupportResistance,
        TaskId::DrawdownRecovery,
        TaskId::VolatilityForecast,
        TaskId::RelativePerformance,
        TaskId::PairConvergence,
    ];

    pub const PREDICTION: [TaskId; 6] = [
        TaskId::EventResponse,
        TaskId::SupportResistance,
        TaskId::DrawdownRecovery,
        TaskId::VolatilityForecast,
        TaskId::RelativePerformance,
        TaskId::PairConvergence,
    ];

    pub fn category(self) -> Category {
        use TaskId::*;
        match self {
            Drawdown | VolatilityRegime | TrendDirection => Category::AssessmentSingle,
            Correlation => Category::AssessmentMulti,
            EventResponse | SupportResistance | DrawdownRecovery | VolatilityForecast => Category::PredictionSingle,
            RelativePerformance | PairConvergence => Category::PredictionMulti,
        }
    }

    pub fn is_prediction(self) -> bool {
        matches!(self.category(), Category::PredictionSingle | Category::PredictionMulti)
    }

    pub fn is_pair(self) -> bool {
        matches!(self.category(), Category::AssessmentMulti | Category::PredictionMulti)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Answer option texts, in letter order.
    pub fn choice_texts(self) -> &'static [&'static str] {
        use TaskId::*;
        match self {
            Drawdown => &[
                "At/Near Peak (<3%)",
                "Pullback (3-10%)",
                "Correction (10-20%)",
                "Severe Decline (>20%)",
            ],
            VolatilityRegime => &["Low (<0.6)", "Normal (0.6-1.6)", "High (>1.6)"],
            TrendDirection => &[
                "Strong Uptrend (>20%)",
                "Mild Uptrend (5-20%)",
                "Sideways (-5% to +5%)",
                "Mild Downtrend (5-20% decline)",
                "Strong Downtrend (>20% decline)",
            ],
            Correlation => &["Positive", "Negative", "No significant correlation"],
            EventResponse => &["Mean-reversion", "Persistence"],
            SupportResistance => &["Breakout", "Bounce"],
            DrawdownRecovery => &["Recovery", "Deepens"],
            VolatilityForecast => &["Increases", "Decreases"],
            RelativePerformance => &["Stock A outperforms", "Stock B outperforms"],
            PairConvergence => &["Convergence", "Divergence"],
        }
    }

    pub fn n_choices(self) -> usize {
        self.choice_texts().len()
    }

    /// Forward horizon in trading days (0 for assessment tasks).
    pub fn horizon(self, cfg: &BenchConfig) -> usize {
        use TaskId::*;
        match self {
            Drawdown | VolatilityRegime | TrendDirection | Correlation => 0,
            EventResponse => cfg.event_horizon,
            SupportResistance => cfg.sr_horizon,
            DrawdownRecovery => cfg.ddr_horizon,
            VolatilityForecast => cfg.vf_horizon,
            RelativePerformance => cfg.relperf_fwd,
            PairConvergence => cfg.pc_horizon,
        }
    }

    /// Column header used in result tables.
    pub fn short_name(self) -> &'static str {
        use TaskId::*;
        match self {
            Drawdown => "Draw.",
            VolatilityRegime => "Vol.",
            TrendDirection => "Trend",
            Correlation => "Corr.",
            EventResponse => "Event",
            SupportResistance => "S/R",
            DrawdownRecovery => "DDR",
            VolatilityForecast => "V.F.",
            RelativePerformance => "R.P.",
            PairConvergence => "P.C.",
        }
    }

    pub fn slug(self) -> &'static str {
        use TaskId::*;
        match self {
            Drawdown => "drawdown",
            VolatilityRegime => "volatility_regime",
            TrendDirection => "trend_direction",
            Correlation => "correlation",
            EventResponse => "event_response",
            SupportResistance => "support_resistance",
            DrawdownRecovery => "drawdown_recovery",
            VolatilityForecast => "volatility_forecast",
            RelativePerformance => "relative_performance",
            PairConvergence => "pair_convergence",
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TaskId::*;
        f.write_str(match self {
            Drawdown => "Drawdown",
            VolatilityRegime => "Volatility Regime",
            TrendDirection => "Trend Direction",
            Correlation => "Correlation",
            EventResponse => "Event Response",
            SupportResistance => "Support/Resistance",
            DrawdownRecovery => "Drawdown Recovery",
            VolatilityForecast => "Volatility Forecast",
            RelativePerformance => "Relative Performance",
            PairConvergence => "Pair Convergence",
        })
    }
}

impl std::str::FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', ' ', '/'], "_");
        TaskId::ALL
            .into_iter()
            .find(|t| t.slug() == key || t.short_name().to_ascii_lowercase() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown task `{s}`")))
    }
}

/// An answer option, stored as its 0-based index and shown as a letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Choice(u8);

impl Choice {
    pub const A: Choice = Choice(0);
    pub const B: Choice = Choice(1);
    pub const C: Choice = Choice(2);
    pub const D: Choice = Choice(3);
    pub const E: Choice = Choice(4);

    pub fn from_index(i: usize) -> Option<Choice> {
        (i < 26).then_some(Choice(i as u8))
    }

    pub fn from_letter(c: char) -> Option<Choice> {
        c.is_ascii_uppercase().then(|| Choice(c as u8 - b'A'))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn letter(self) -> char {
        (b'A' + self.0) as char
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl Serialize for Choice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_char(self.letter())
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Choice::from_letter(c).ok_or_else(|| serde::de::Error::custom(format!("bad choice `{s}`"))),
            _ => Err(serde::de::Error::custom(format!("bad choice `{s}`"))),
        }
    }
}

/// QA generation parameters. Defaults reproduce the published benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub window_len: usize,
    /// Target number of labelled candidates per (task, split) before capping.
    pub raw_samples_per_task: usize,
    /// Anchor draws allowed per (task, split) before giving up on the target.
    pub max_draws: usize,
    pub cap_train: usize,
    pub cap_test: usize,
    pub corr_pos: f64,
    pub corr_neg: f64,
    pub event_z: f64,
    pub relperf_margin: f64,
    pub relperf_fwd: usize,
    pub sr_breakout: f64,
    pub sr_proximity: f64,
    pub sr_lookback: usize,
    pub ddr_min_drawdown: f64,
    pub ddr_toward_peak: f64,
    pub vf_change: f64,
    pub pc_margin: f64,
    pub min_stock_gap: usize,
    pub recent_vol_days: usize,
    pub event_horizon: usize,
    pub sr_horizon: usize,
    pub ddr_horizon: usize,
    pub vf_horizon: usize,
    pub pc_horizon: usize,
    pub std_kind: StdKind,
    pub base_seed: u64,
    /// Per-task seed overrides; tasks not listed derive theirs from `base_seed`.
    pub task_seeds: BTreeMap<TaskId, u64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            window_len: 120,
            raw_samples_per_task: 100_000,
            max_draws: 400_000,
            cap_train: 3_500,
            cap_test: 1_000,
            corr_pos: 0.30,
            corr_neg: -0.10,
            event_z: 2.5,
            relperf_margin: 0.05,
            relperf_fwd: 20,
            sr_breakout: 0.03,
            sr_proximity: 0.05,
            sr_lookback: 60,
            ddr_min_drawdown: 0.05,
            ddr_toward_peak: 0.03,
            vf_change: 0.25,
            pc_margin: 0.03,
            min_stock_gap: 20,
            recent_vol_days: 20,
            event_horizon: 10,
            sr_horizon: 10,
            ddr_horizon: 20,
            vf_horizon: 20,
            pc_horizon: 20,
            std_kind: StdKind::Sample,
            base_seed: 42,
            task_seeds: BTreeMap::new(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("corr_pos", self.corr_pos),
            ("event_z", self.event_z),
            ("relperf_margin", self.relperf_margin),
            ("sr_breakout", self.sr_breakout),
            ("sr_proximity", self.sr_proximity),
            ("ddr_min_drawdown", self.ddr_min_drawdown),
            ("ddr_toward_peak", self.ddr_toward_peak),
            ("vf_change", self.vf_change),
            ("pc_margin", self.pc_margin),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Config(format!("{name} must be positive, got {v}")));
        }
        if self.corr_neg >= self.corr_pos {
            return Err(Error::Config("corr_neg must be below corr_pos".into()));
        }
        if self.window_len < self.sr_lookback + 1 || self.window_len < self.recent_vol_days + 2 {
            return Err(Error::Config(format!(
                "window_len {} too short for lookback {} / recent window {}",
                self.window_len, self.sr_lookback, self.recent_vol_days
            )));
        }
        if self.recent_vol_days < 2 {
            return Err(Error::Config("recent_vol_days must be at least 2".into()));
        }
        let horizons = [
            self.event_horizon,
            self.sr_horizon,
            self.ddr_horizon,
            self.vf_horizon,
            self.pc_horizon,
            self.relperf_fwd,
        ];
        if horizons.contains(&0) {
            return Err(Error::Config("prediction horizons must be positive".into()));
        }
        if self.vf_horizon < 2 {
            return Err(Error::Config("vf_horizon must be at least 2".into()));
        }
        if self.cap_train > self.raw_samples_per_task || self.cap_test > self.raw_samples_per_task {
            return Err(Error::Config("caps must not exceed raw_samples_per_task".into()));
        }
        Ok(())
    }

    pub fn cap_for(&self, split: SplitName) -> usize {
        if split.is_test() {
            self.cap_test
        } else {
            self.cap_train
        }
    }

    pub fn seed_for(&self, task: TaskId) -> u64 {
        self.task_seeds
            .get(&task)
            .copied()
            .unwrap_or_else(|| mix_seed(self.base_seed, 1 + task.index() as u64))
    }
}

/// SplitMix64 finaliser over `seed ^ stream`; used to derive independent seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Where a sample came from in the seeded draw sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedTrace {
    pub seed: u64,
    pub draw: u64,
}

/// One benchmark question with its gold answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSample {
    pub task: TaskId,
    pub category: Category,
    pub tickers: Vec<String>,
    pub split: SplitName,
    pub window_start: NaiveDate,
    pub anchor_date: NaiveDate,
    pub horizon_days: usize,
    /// First and last dates of the labelling horizon (absent for assessment tasks).
    pub forward_dates: Option<(NaiveDate, NaiveDate)>,
    pub question: String,
    pub choices: Vec<String>,
    pub gold: Choice,
    /// Prompt windows, one per ticker, rounded to cents.
    #[serde(with = "crate::corpus::price_lists")]
    pub windows: Vec<Vec<f64>>,
    /// Labelling horizon prices, one per ticker. Never shown in prompts.
    #[serde(with = "crate::corpus::price_lists")]
    pub forwards: Vec<Vec<f64>>,
    pub aux: BTreeMap<String, f64>,
    pub seed_trace: SeedTrace,
}

impl TaskSample {
    pub fn aux(&self, key: &str) -> Result<f64> {
        self.aux
            .get(key)
            .copied()
            .ok_or_else(|| Error::Render(format!("{} sample lacks aux quantity `{key}`", self.task)))
    }

    pub fn window(&self, leg: usize) -> &[f64] {
        &self.windows[leg]
    }

    /// Full model prompt: question, lettered options and the answer format.
    pub fn prompt(&self) -> String {
        render_prompt(&self.question, &self.choices)
    }
}
