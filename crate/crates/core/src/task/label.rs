//! Gold-label rules for every task.
//!
//! Prediction tasks are split in two: a window-only [`PredictionContext`]
//! (inclusion rules live here) and [`decide`], a total rule mapping a forward
//! path to an answer. The forecast baselines call `decide` on predicted paths,
//! so labelling and forecast classification share one code path.

use std::collections::BTreeMap;

use crate::error::MathError;
use crate::math::{
    cumulative_return, daily_returns, drawdown, key_levels, pair_spread, return_correlation, shock_zscores,
    std_dev, volatility_reading, DrawdownReading, KeyLevel, LevelKind, StdKind, VolReading,
};

use super::{BenchConfig, Choice, TaskId};

/// A gold answer plus the window-derived quantities needed to explain it.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled {
    pub gold: Choice,
    pub aux: BTreeMap<String, f64>,
}

fn aux_map<const N: usize>(pairs: [(&str, f64); N]) -> BTreeMap<String, f64> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Rounds to 12 decimals so that ratios of cent prices landing exactly on a
/// threshold are compared by their exact value, not by float noise. Every
/// threshold comparison in this module goes through it.
pub fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

pub fn classify_drawdown(frac: f64) -> Choice {
    let frac = snap(frac);
    if frac < 0.03 {
        Choice::A
    } else if frac < 0.10 {
        Choice::B
    } else if frac < 0.20 {
        Choice::C
    } else {
        Choice::D
    }
}

pub fn classify_vol_ratio(ratio: f64) -> Choice {
    let ratio = snap(ratio);
    if ratio < 0.6 {
        Choice::A
    } else if ratio <= 1.6 {
        Choice::B
    } else {
        Choice::C
    }
}

pub fn classify_trend(ret: f64) -> Choice {
    let ret = snap(ret);
    if ret > 0.20 {
        Choice::A
    } else if ret > 0.05 {
        Choice::B
    } else if ret >= -0.05 {
        Choice::C
    } else if ret >= -0.20 {
        Choice::D
    } else {
        Choice::E
    }
}

pub fn classify_correlation(rho: f64, cfg: &BenchConfig) -> Choice {
    let rho = snap(rho);
    if rho > cfg.corr_pos {
        Choice::A
    } else if rho < cfg.corr_neg {
        Choice::B
    } else {
        Choice::C
    }
}

fn drawdown_aux(r: &DrawdownReading) -> [(&'static str, f64); 4] {
    [
        ("peak", r.peak_price),
        ("peak_day", (r.peak_index + 1) as f64),
        ("current", r.current_price),
        ("drawdown_frac", r.drawdown_frac),
    ]
}

fn vol_aux(v: &VolReading, recent_days: usize) -> [(&'static str, f64); 4] {
    [
        ("overall_vol", v.overall_vol),
        ("recent_vol", v.recent_vol),
        ("vol_ratio", v.ratio),
        ("recent_days", recent_days as f64),
    ]
}

pub fn label_drawdown(window: &[f64]) -> Result<Labeled, MathError> {
    let r = drawdown(window)?;
    Ok(Labeled {
        gold: classify_drawdown(r.drawdown_frac),
        aux: aux_map(drawdown_aux(&r)),
    })
}

/// `None` when the window is flat (no volatility to compare).
pub fn label_volatility_regime(window: &[f64], cfg: &BenchConfig) -> Result<Option<Labeled>, MathError> {
    let v = match volatility_reading(window, cfg.recent_vol_days, cfg.std_kind) {
        Ok(v) => v,
        Err(MathError::Degenerate(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(Labeled {
        gold: classify_vol_ratio(v.ratio),
        aux: aux_map(vol_aux(&v, cfg.recent_vol_days)),
    }))
}

pub fn label_trend(window: &[f64]) -> Result<Labeled, MathError> {
    let ret = cumulative_return(window)?;
    Ok(Labeled {
        gold: classify_trend(ret),
        aux: aux_map([("start", window[0]), ("end", window[window.len() - 1]), ("return_frac", ret)]),
    })
}

/// `None` when either leg is flat.
pub fn label_correlation(a: &[f64], b: &[f64], cfg: &BenchConfig) -> Result<Option<Labeled>, MathError> {
    let rho = match return_correlation(a, b) {
        Ok(r) => r,
        Err(MathError::Degenerate(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(Labeled {
        gold: classify_correlation(rho, cfg),
        aux: aux_map([("correlation", rho)]),
    }))
}

/// Window-only state a prediction rule compares the forward path against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionContext {
    Event { event_return: f64, z: f64, last: f64 },
    Level { level: KeyLevel, last: f64 },
    Drawdown { reading: DrawdownReading },
    Volatility { reading: VolReading, last: f64 },
    Relative { last_a: f64, last_b: f64 },
    Spread { spread: f64 },
}

fn degenerate_to_none<T>(r: Result<T, MathError>) -> Result<Option<T>, MathError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(MathError::Degenerate(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Applies the window-side inclusion rule of a prediction task. `None` means
/// the anchor does not qualify.
pub fn prediction_context(
    task: TaskId,
    windows: &[&[f64]],
    cfg: &BenchConfig,
) -> Result<Option<PredictionContext>, MathError> {
    let w = windows[0];
    let last = *w.last().ok_or(MathError::TooShort { needed: 1, got: 0 })?;
    let ctx = match task {
        TaskId::EventResponse => {
            let Some(z) = degenerate_to_none(shock_zscores(w, cfg.std_kind))? else {
                return Ok(None);
            };
            let z_last = z[z.len() - 1];
            if z_last.abs() <= cfg.event_z {
                return Ok(None);
            }
            PredictionContext::Event {
                event_return: last / w[w.len() - 2] - 1.0,
                z: z_last,
                last,
            }
        }
        TaskId::SupportResistance => {
            let (sup, res) = key_levels(w, cfg.sr_lookback)?;
            let level = if snap(sup.proximity_frac) <= snap(res.proximity_frac) { sup } else { res };
            if snap(level.proximity_frac) > cfg.sr_proximity {
                return Ok(None);
            }
            PredictionContext::Level { level, last }
        }
        TaskId::DrawdownRecovery => {
            let reading = drawdown(w)?;
            if snap(reading.drawdown_frac) <= cfg.ddr_min_drawdown {
                return Ok(None);
            }
            PredictionContext::Drawdown { reading }
        }
        TaskId::VolatilityForecast => {
            let Some(reading) = degenerate_to_none(volatility_reading(w, cfg.recent_vol_days, cfg.std_kind))? else {
                return Ok(None);
            };
            if !(reading.recent_vol > 0.0) {
                return Ok(None);
            }
            PredictionContext::Volatility { reading, last }
        }
        TaskId::RelativePerformance => {
            let b = windows.get(1).ok_or(MathError::Degenerate("pair task needs two windows"))?;
            PredictionContext::Relative {
                last_a: last,
                last_b: b[b.len() - 1],
            }
        }
        TaskId::PairConvergence => {
            let b = windows.get(1).ok_or(MathError::Degenerate("pair task needs two windows"))?;
            let spread = pair_spread(last, b[b.len() - 1])?;
            if snap(spread.abs()) < cfg.pc_margin {
                return Ok(None);
            }
            PredictionContext::Spread { spread }
        }
        _ => return Err(MathError::Degenerate("not a prediction task")),
    };
    Ok(Some(ctx))
}

/// Return from the last window close to the end of a forward path.
fn forward_return(last: f64, forward: &[f64]) -> f64 {
    forward[forward.len() - 1] / last - 1.0
}

/// Standard deviation of the returns linking the last window close and the
/// forward path.
pub fn forward_volatility(last: f64, forward: &[f64], kind: StdKind) -> f64 {
    let mut path = Vec::with_capacity(forward.len() + 1);
    path.push(last);
    path.extend_from_slice(forward);
    daily_returns(&path)
        .ok()
        .and_then(|r| std_dev(&r, kind))
        .unwrap_or(0.0)
}

/// Maps a forward path (one per leg) to an answer. Total: every path gets a
/// letter, including flat forecast paths.
pub fn decide(ctx: &PredictionContext, forwards: &[&[f64]], cfg: &BenchConfig) -> Choice {
    let fa = forwards[0];
    match *ctx {
        PredictionContext::Event { event_return, last, .. } => {
            let fwd = forward_return(last, fa);
            let same_sign = (fwd > 0.0 && event_return > 0.0) || (fwd < 0.0 && event_return < 0.0);
            if same_sign {
                Choice::B
            } else {
                Choice::A
            }
        }
        PredictionContext::Level { level, .. } => {
            let crossed = match level.kind {
                LevelKind::Resistance => fa.iter().any(|p| snap(p / level.level_price - 1.0) > cfg.sr_breakout),
                LevelKind::Support => fa.iter().any(|p| snap(1.0 - p / level.level_price) > cfg.sr_breakout),
            };
            if crossed {
                Choice::A
            } else {
                Choice::B
            }
        }
        PredictionContext::Drawdown { reading } => {
            let best = fa.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if snap(best / reading.current_price - 1.0) >= cfg.ddr_toward_peak {
                Choice::A
            } else {
                Choice::B
            }
        }
        PredictionContext::Volatility { reading, last } => {
            let fwd_vol = forward_volatility(last, fa, cfg.std_kind);
            if snap(fwd_vol / reading.recent_vol - 1.0) > cfg.vf_change {
                Choice::A
            } else {
                Choice::B
            }
        }
        PredictionContext::Relative { last_a, last_b } => {
            if snap(forward_return(last_a, fa) - forward_return(last_b, forwards[1])) > 0.0 {
                Choice::A
            } else {
                Choice::B
            }
        }
        PredictionContext::Spread { spread } => {
            let fb = forwards[1];
            let later = (fa[fa.len() - 1] - fb[fb.len() - 1]) / (fa[fa.len() - 1] + fb[fb.len() - 1]);
            if snap(later.abs()) < snap(spread.abs()) {
                Choice::A
            } else {
                Choice::B
            }
        }
    }
}

/// Label-quality exclusions that depend on the realised future.
fn excluded_by_outcome(ctx: &PredictionContext, forwards: &[&[f64]], cfg: &BenchConfig) -> bool {
    match *ctx {
        PredictionContext::Relative { last_a, last_b } => {
            let diff = forward_return(last_a, forwards[0]) - forward_return(last_b, forwards[1]);
            snap(diff.abs()) < cfg.relperf_margin
        }
        _ => false,
    }
}

/// Window-derived quantities shown in a prediction sample's reasoning.
fn prediction_aux(task: TaskId, ctx: &PredictionContext, windows: &[&[f64]], cfg: &BenchConfig) -> BTreeMap<String, f64> {
    let w = windows[0];
    let n = w.len();
    let trailing = |p: &[f64], days: usize| {
        let k = days.min(p.len() - 1);
        p[p.len() - 1] / p[p.len() - 1 - k] - 1.0
    };
    match *ctx {
        PredictionContext::Event { event_return, z, last } => {
            // Trend over the days leading into the event, excluding the event day.
            let pre = &w[..n - 1];
            aux_map([
                ("event_return", event_return),
                ("z", z),
                ("current", last),
                ("prior_close", w[n - 2]),
                ("pre_trend", trailing(pre, cfg.recent_vol_days)),
                ("pre_trend_days", cfg.recent_vol_days.min(pre.len() - 1) as f64),
            ])
        }
        PredictionContext::Level { level, last } => {
            let (sup, res) = key_levels(w, cfg.sr_lookback).expect("levels computed for context");
            aux_map([
                ("level", level.level_price),
                ("level_is_resistance", f64::from(u8::from(level.kind == LevelKind::Resistance))),
                ("proximity", level.proximity_frac),
                ("current", last),
                ("support", sup.level_price),
                ("resistance", res.level_price),
                ("momentum", trailing(w, 10)),
                (
                    "breakout_level",
                    match level.kind {
                        LevelKind::Resistance => level.level_price * (1.0 + cfg.sr_breakout),
                        LevelKind::Support => level.level_price * (1.0 - cfg.sr_breakout),
                    },
                ),
            ])
        }
        PredictionContext::Drawdown { reading } => {
            let mut m = aux_map(drawdown_aux(&reading));
            m.insert("peak_days_ago".into(), (n - 1 - reading.peak_index) as f64);
            m.insert("momentum".into(), trailing(w, 5));
            m.insert("recovery_target".into(), reading.current_price * (1.0 + cfg.ddr_toward_peak));
            m
        }
        PredictionContext::Volatility { reading, .. } => {
            let mut m = aux_map(vol_aux(&reading, cfg.recent_vol_days));
            m.insert("current".into(), w[n - 1]);
            m
        }
        PredictionContext::Relative { last_a, last_b } => {
            let b = windows[1];
            aux_map([
                ("current_a", last_a),
                ("current_b", last_b),
                ("momentum_a", trailing(w, cfg.relperf_fwd)),
                ("momentum_b", trailing(b, cfg.relperf_fwd)),
                ("momentum_days", cfg.relperf_fwd.min(n - 1) as f64),
                ("window_return_a", trailing(w, n - 1)),
                ("window_return_b", trailing(b, n - 1)),
            ])
        }
        PredictionContext::Spread { spread } => {
            let b = windows[1];
            let earlier = pair_spread(w[0], b[0]).unwrap_or(0.0);
            let _ = task;
            aux_map([
                ("spread", spread),
                ("spread_start", earlier),
                ("current_a", w[n - 1]),
                ("current_b", b[b.len() - 1]),
                ("momentum_a", trailing(w, 20)),
                ("momentum_b", trailing(b, 20)),
            ])
        }
    }
}

fn check_forwards(forwards: &[&[f64]], legs: usize, horizon: usize) -> Result<(), MathError> {
    if forwards.len() < legs {
        return Err(MathError::Degenerate("missing forward path"));
    }
    for f in &forwards[..legs] {
        if f.len() != horizon {
            return Err(MathError::LengthMismatch {
                left: horizon,
                right: f.len(),
            });
        }
    }
    Ok(())
}

fn label_prediction(
    task: TaskId,
    windows: &[&[f64]],
    forwards: &[&[f64]],
    cfg: &BenchConfig,
) -> Result<Option<Labeled>, MathError> {
    let legs = if task.is_pair() { 2 } else { 1 };
    if windows.len() < legs {
        return Err(MathError::Degenerate("pair task needs two windows"));
    }
    check_forwards(forwards, legs, task.horizon(cfg))?;
    let Some(ctx) = prediction_context(task, windows, cfg)? else {
        return Ok(None);
    };
    if excluded_by_outcome(&ctx, forwards, cfg) {
        return Ok(None);
    }
    Ok(Some(Labeled {
        gold: decide(&ctx, forwards, cfg),
        aux: prediction_aux(task, &ctx, windows, cfg),
    }))
}

pub fn label_event_response(window: &[f64], forward: &[f64], cfg: &BenchConfig) -> Result<Option<Labeled>, MathError> {
    label_prediction(TaskId::EventResponse, &[window], &[forward], cfg)
}

pub fn label_support_resistance(window: &[f64], forward: &[f64], cfg: &BenchConfig) -> Result<Option<Labeled>, MathError> {
    label_prediction(TaskId::SupportResistance, &[window], &[forward], cfg)
}

pub fn label_drawdown_recovery(window: &[f64], forward: &[f64], cfg: &BenchConfig) -> Result<Option<Labeled>, MathError> {
    label_prediction(TaskId::DrawdownRecovery, &[window], &[forward], cfg)
}

pub fn label_volatility_forecast(window: &[f64], forward: &[f64], cfg: &BenchConfig) -> Result<Option<Labeled>, MathError> {
    label_prediction(TaskId::VolatilityForecast, &[window], &[forward], cfg)
}

pub fn label_relative_performance(
    a: &[f64],
    b: &[f64],
    a_fwd: &[f64],
    b_fwd: &[f64],
    cfg: &BenchConfig,
) -> Result<Option<Labeled>, MathError> {
    label_prediction(TaskId::RelativePerformance, &[a, b], &[a_fwd, b_fwd], cfg)
}

pub fn label_pair_convergence(
    a: &[f64],
    b: &[f64],
    a_fwd: &[f64],
    b_fwd: &[f64],
    cfg: &BenchConfig,
) -> Result<Option<Labeled>, MathError> {
    label_prediction(TaskId::PairConvergence, &[a, b], &[a_fwd, b_fwd], cfg)
}

/// Labels any task. `None` means the candidate is skipped.
pub fn label_task(
    task: TaskId,
    windows: &[&[f64]],
    forwards: &[&[f64]],
    cfg: &BenchConfig,
) -> Result<Option<Labeled>, MathError> {
    match task {
        TaskId::Drawdown => label_drawdown(windows[0]).map(Some),
        TaskId::VolatilityRegime => label_volatility_regime(windows[0], cfg),
        TaskId::TrendDirection => label_trend(windows[0]).map(Some),
        TaskId::Correlation => {
            let b = windows.get(1).ok_or(MathError::Degenerate("pair task needs two windows"))?;
            label_correlation(windows[0], b, cfg)
        }
        _ => label_prediction(task, windows, forwards, cfg),
    }
}
