//! Statistical price forecasters and forecast-then-classify.
//!
//! A forecaster maps a price window to a path of `horizon` predicted closes.
//! The path is then pushed through the same decision rule used to label the
//! prediction tasks, so a forecaster that emits the realised future scores
//! 100% by construction.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusRecord;
use crate::error::{Error, MathError, Result};
use crate::eval::{EvalReport, Outcome};
use crate::math::{daily_returns, mean, std_dev};
use crate::task::label::{decide, prediction_context};
use crate::task::{mix_seed, BenchConfig, Choice, TaskId, TaskSample};

/// Minimum window length accepted by every forecaster.
pub const MIN_WINDOW: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMethod {
    LastValue,
    MovingAverage,
    Ets,
    Drift,
    Momentum,
    /// Emits the realised forward prices. Wiring check only.
    PerfectFuture,
    /// Gaussian random walk with the window's return volatility.
    RandomPath,
}

impl ForecastMethod {
    /// The five statistical methods, in report order.
    pub const STATISTICAL: [ForecastMethod; 5] = [
        ForecastMethod::LastValue,
        ForecastMethod::MovingAverage,
        ForecastMethod::Ets,
        ForecastMethod::Drift,
        ForecastMethod::Momentum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ForecastMethod::LastValue => "LastValue",
            ForecastMethod::MovingAverage => "MA",
            ForecastMethod::Ets => "ETS",
            ForecastMethod::Drift => "Drift",
            ForecastMethod::Momentum => "Momentum",
            ForecastMethod::PerfectFuture => "PerfectFuture",
            ForecastMethod::RandomPath => "RandomPath",
        }
    }
}

impl fmt::Display for ForecastMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ForecastMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Ok(match key.as_str() {
            "lastvalue" | "last" | "naive" => ForecastMethod::LastValue,
            "ma" | "movingaverage" => ForecastMethod::MovingAverage,
            "ets" | "holt" => ForecastMethod::Ets,
            "drift" => ForecastMethod::Drift,
            "momentum" => ForecastMethod::Momentum,
            "perfectfuture" | "oracle" => ForecastMethod::PerfectFuture,
            "randompath" | "random" => ForecastMethod::RandomPath,
            _ => return Err(Error::Config(format!("unknown forecast method `{s}`"))),
        })
    }
}

/// Tunables for the statistical forecasters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastParams {
    pub ma_window: usize,
    pub momentum_window: usize,
    /// `true`: last × (1 + g)^t. `false`: last × (1 + t·g).
    pub momentum_compound: bool,
    pub ets_alpha: f64,
    pub ets_beta: f64,
    /// Seed for [`ForecastMethod::RandomPath`].
    pub random_seed: u64,
}

impl Default for ForecastParams {
    fn default() -> Self {
        Self {
            ma_window: 20,
            momentum_window: 20,
            momentum_compound: true,
            ets_alpha: 0.5,
            ets_beta: 0.1,
            random_seed: 0,
        }
    }
}

impl ForecastParams {
    pub fn validate(&self) -> Result<()> {
        if self.ma_window == 0 || self.ma_window >= MIN_WINDOW + 1 {
            return Err(Error::Config(format!("ma_window must be in 1..={MIN_WINDOW}")));
        }
        if self.momentum_window == 0 || self.momentum_window >= MIN_WINDOW {
            return Err(Error::Config(format!("momentum_window must be in 1..{MIN_WINDOW}")));
        }
        for (name, v) in [("ets_alpha", self.ets_alpha), ("ets_beta", self.ets_beta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

/// Predicted closes for the `horizon` days after the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPath {
    pub method: ForecastMethod,
    pub horizon: usize,
    pub predicted_closes: Vec<f64>,
}

/// Holt linear trend: level starts at the first close, trend at zero.
fn holt(window: &[f64], alpha: f64, beta: f64) -> (f64, f64) {
    let mut level = window[0];
    let mut trend = 0.0;
    for &y in &window[1..] {
        let prev = level;
        level = alpha * y + (1.0 - alpha) * (level + trend);
        trend = beta * (level - prev) + (1.0 - beta) * trend;
    }
    (level, trend)
}

/// Forecasts `horizon` closes after `window` with a statistical method.
///
/// Predictions are floored at `last × 1e-4` so paths stay positive.
pub fn forecast(method: ForecastMethod, window: &[f64], horizon: usize, params: &ForecastParams) -> Result<ForecastPath> {
    if window.len() < MIN_WINDOW {
        return Err(MathError::TooShort {
            needed: MIN_WINDOW,
            got: window.len(),
        }
        .into());
    }
    if let Some(&bad) = window.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(MathError::NonPositive(bad).into());
    }
    let n = window.len();
    let last = window[n - 1];
    let steps = 1..=horizon;
    let raw: Vec<f64> = match method {
        ForecastMethod::LastValue => vec![last; horizon],
        ForecastMethod::MovingAverage => vec![mean(&window[n - params.ma_window..]); horizon],
        ForecastMethod::Drift => {
            let slope = (last - window[0]) / (n - 1) as f64;
            steps.map(|t| last + t as f64 * slope).collect()
        }
        ForecastMethod::Momentum => {
            let tail = &window[n - params.momentum_window - 1..];
            let g = mean(&daily_returns(tail)?);
            if params.momentum_compound {
                steps.map(|t| last * (1.0 + g).powi(t as i32)).collect()
            } else {
                steps.map(|t| last * (1.0 + t as f64 * g)).collect()
            }
        }
        ForecastMethod::Ets => {
            let (level, trend) = holt(window, params.ets_alpha, params.ets_beta);
            steps.map(|t| level + t as f64 * trend).collect()
        }
        ForecastMethod::PerfectFuture | ForecastMethod::RandomPath => {
            return Err(Error::Config(format!(
                "{method} needs sample context; use forecast_sample"
            )))
        }
    };
    let floor = last * 1e-4;
    Ok(ForecastPath {
        method,
        horizon,
        predicted_closes: raw.into_iter().map(|p| p.max(floor)).collect(),
    })
}

fn sample_stream(sample: &TaskSample, leg: usize) -> u64 {
    let key = format!("{}|{}|{}|{leg}", sample.task.slug(), sample.tickers.join(","), sample.anchor_date);
    key.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn random_path(window: &[f64], horizon: usize, seed: u64) -> Result<Vec<f64>> {
    let r = daily_returns(window)?;
    let sigma = std_dev(&r, crate::math::StdKind::Sample).unwrap_or(0.0).max(1e-4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = window[window.len() - 1];
    let floor = p * 1e-4;
    Ok((0..horizon)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            p = (p * (1.0 + sigma * z)).max(floor);
            p
        })
        .collect())
}

/// One forecast path per leg of a prediction sample.
pub fn forecast_sample(method: ForecastMethod, sample: &TaskSample, params: &ForecastParams) -> Result<Vec<ForecastPath>> {
    let horizon = sample.horizon_days;
    (0..sample.windows.len())
        .map(|leg| {
            let predicted_closes = match method {
                ForecastMethod::PerfectFuture => sample
                    .forwards
                    .get(leg)
                    .cloned()
                    .ok_or_else(|| Error::Render(format!("{} sample has no forward prices", sample.task)))?,
                ForecastMethod::RandomPath => random_path(
                    sample.window(leg),
                    horizon,
                    mix_seed(params.random_seed, sample_stream(sample, leg)),
                )?,
                _ => return forecast(method, sample.window(leg), horizon, params),
            };
            Ok(ForecastPath {
                method,
                horizon,
                predicted_closes,
            })
        })
        .collect()
}

/// Converts forecast paths (one per leg) into an answer with the labelling rule.
pub fn classify_from_forecast(sample: &TaskSample, paths: &[ForecastPath], cfg: &BenchConfig) -> Result<Choice> {
    let task = sample.task;
    if !task.is_prediction() {
        return Err(Error::Config(format!("{task} is not a prediction task")));
    }
    let legs = if task.is_pair() { 2 } else { 1 };
    if paths.len() != legs || sample.windows.len() != legs {
        return Err(Error::Config(format!(
            "{task} needs {legs} forecast path(s), got {}",
            paths.len()
        )));
    }
    let expected = task.horizon(cfg);
    for p in paths {
        if p.horizon != expected || p.predicted_closes.len() != expected {
            return Err(Error::Horizon {
                anchor: sample.windows[0].len() - 1,
                horizon: expected,
                available: p.predicted_closes.len(),
            });
        }
    }
    let windows: Vec<&[f64]> = sample.windows.iter().map(Vec::as_slice).collect();
    let ctx = prediction_context(task, &windows, cfg)?
        .ok_or_else(|| Error::Render(format!("{task} window does not satisfy its inclusion rule")))?;
    let forwards: Vec<&[f64]> = paths.iter().map(|p| p.predicted_closes.as_slice()).collect();
    Ok(decide(&ctx, &forwards, cfg))
}

/// Scores a forecasting method on the prediction tasks of a corpus.
/// Assessment tasks are listed as not applicable.
pub fn run_baseline(
    method: ForecastMethod,
    records: &[CorpusRecord],
    cfg: &BenchConfig,
    params: &ForecastParams,
) -> Result<EvalReport> {
    let mut outcomes = Vec::new();
    for rec in records.iter().filter(|r| r.sample.task.is_prediction()) {
        let paths = forecast_sample(method, &rec.sample, params)?;
        let choice = classify_from_forecast(&rec.sample, &paths, cfg)?;
        outcomes.push(Outcome::parsed(rec, choice));
    }
    let not_applicable = TaskId::ALL.iter().copied().filter(|t| !t.is_prediction()).collect();
    let mut report = EvalReport::from_outcomes(method.name(), records, &outcomes, not_applicable);
    report.config = serde_json::json!({ "method": method, "forecast": params });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cot::tests_support::sample_with_forward;

    fn params() -> ForecastParams {
        ForecastParams::default()
    }

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|i| 100.0 + i as f64).collect()
    }

    #[test]
    fn last_value_is_constant() {
        let mut w = ramp(30);
        *w.last_mut().unwrap() = 100.0;
        let p = forecast(ForecastMethod::LastValue, &w, 3, &params()).unwrap();
        assert_eq!(p.predicted_closes, vec![100.0, 100.0, 100.0]);
    }

    #[test]
    fn drift_continues_a_line() {
        let w = ramp(40);
        let p = forecast(ForecastMethod::Drift, &w, 5, &params()).unwrap();
        for (t, v) in p.predicted_closes.iter().enumerate() {
            assert!((v - (140.0 + t as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn ets_degenerates_to_last_value() {
        let w: Vec<f64> = (0..50).map(|i| 100.0 + ((i * 7) % 11) as f64).collect();
        let p = ForecastParams {
            ets_alpha: 1.0,
            ets_beta: 0.0,
            ..params()
        };
        let ets = forecast(ForecastMethod::Ets, &w, 10, &p).unwrap();
        let lv = forecast(ForecastMethod::LastValue, &w, 10, &p).unwrap();
        assert_eq!(ets.predicted_closes, lv.predicted_closes);
    }

    #[test]
    fn moving_average_uses_last_twenty() {
        let w = ramp(60);
        let p = forecast(ForecastMethod::MovingAverage, &w, 2, &params()).unwrap();
        // mean of 140..=159
        assert!((p.predicted_closes[0] - 149.5).abs() < 1e-9);
    }

    #[test]
    fn momentum_compound_and_arithmetic() {
        // constant 1% daily growth
        let w: Vec<f64> = (0..30).map(|i| 100.0 * 1.01f64.powi(i)).collect();
        let last = w[29];
        let c = forecast(ForecastMethod::Momentum, &w, 3, &params()).unwrap();
        assert!((c.predicted_closes[2] - last * 1.01f64.powi(3)).abs() < 1e-9);
        let a = forecast(
            ForecastMethod::Momentum,
            &w,
            3,
            &ForecastParams {
                momentum_compound: false,
                ..params()
            },
        )
        .unwrap();
        assert!((a.predicted_closes[2] - last * 1.03).abs() < 1e-9);
    }

    #[test]
    fn short_window_is_rejected() {
        assert!(forecast(ForecastMethod::Drift, &ramp(20), 5, &params()).is_err());
    }

    #[test]
    fn paths_stay_positive() {
        let w: Vec<f64> = (0..30).map(|i| 300.0 - 10.0 * i as f64).collect();
        let p = forecast(ForecastMethod::Drift, &w, 60, &params()).unwrap();
        assert!(p.predicted_closes.iter().all(|v| *v > 0.0));
    }

    fn vf_sample() -> TaskSample {
        let window: Vec<f64> = (0..120).map(|i| 100.0 + if i % 2 == 0 { 0.0 } else { 1.0 }).collect();
        let forward: Vec<f64> = (0..20).map(|i| 100.0 + if i % 2 == 0 { 3.0 } else { 0.0 }).collect();
        sample_with_forward(TaskId::VolatilityForecast, vec![window], vec![forward])
    }

    #[test]
    fn last_value_forces_vol_decrease() {
        let cfg = BenchConfig::default();
        let s = vf_sample();
        let paths = forecast_sample(ForecastMethod::LastValue, &s, &params()).unwrap();
        assert_eq!(classify_from_forecast(&s, &paths, &cfg).unwrap(), Choice::B);
    }

    #[test]
    fn perfect_future_reproduces_gold() {
        let cfg = BenchConfig::default();
        let s = vf_sample();
        let paths = forecast_sample(ForecastMethod::PerfectFuture, &s, &params()).unwrap();
        assert_eq!(classify_from_forecast(&s, &paths, &cfg).unwrap(), s.gold);
    }

    #[test]
    fn horizon_mismatch_is_an_error() {
        let cfg = BenchConfig::default();
        let s = vf_sample();
        let mut paths = forecast_sample(ForecastMethod::LastValue, &s, &params()).unwrap();
        paths[0].predicted_closes.pop();
        paths[0].horizon -= 1;
        assert!(matches!(
            classify_from_forecast(&s, &paths, &cfg),
            Err(Error::Horizon { .. })
        ));
    }

    #[test]
    fn last_value_event_is_mean_reversion() {
        let cfg = BenchConfig::default();
        let mut window = vec![100.0; 119];
        for (i, p) in window.iter_mut().enumerate() {
            *p += if i % 2 == 0 { 0.3 } else { -0.3 };
        }
        window.push(110.0);
        let s = sample_with_forward(TaskId::EventResponse, vec![window], vec![vec![111.0; 10]]);
        let paths = forecast_sample(ForecastMethod::LastValue, &s, &params()).unwrap();
        assert_eq!(classify_from_forecast(&s, &paths, &cfg).unwrap(), Choice::A);
    }

    #[test]
    fn random_path_is_deterministic() {
        let s = vf_sample();
        let a = forecast_sample(ForecastMethod::RandomPath, &s, &params()).unwrap();
        let b = forecast_sample(ForecastMethod::RandomPath, &s, &params()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].predicted_closes.len(), 20);
    }

    proptest::proptest! {
        #[test]
        fn forecasts_are_scale_equivariant(
            base in proptest::collection::vec(1.0f64..500.0, 21..80),
            c in 0.01f64..100.0,
            horizon in 1usize..30,
        ) {
            for m in ForecastMethod::STATISTICAL {
                let p = forecast(m, &base, horizon, &params()).unwrap();
                let scaled: Vec<f64> = base.iter().map(|v| v * c).collect();
                let q = forecast(m, &scaled, horizon, &params()).unwrap();
                for (x, y) in p.predicted_closes.iter().zip(&q.predicted_closes) {
                    proptest::prop_assert!((x * c - y).abs() <= 1e-9 * y.abs().max(1.0));
                }
            }
        }

        #[test]
        fn flat_methods_have_zero_variance(base in proptest::collection::vec(1.0f64..500.0, 21..80)) {
            for m in [ForecastMethod::LastValue, ForecastMethod::MovingAverage] {
                let p = forecast(m, &base, 20, &params()).unwrap();
                proptest::prop_assert!(p.predicted_closes.windows(2).all(|w| w[0] == w[1]));
            }
        }
    }
}
