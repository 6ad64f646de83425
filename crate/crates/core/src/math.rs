//! Numeric kernels over closing-price windows.
//!
//! All functions take raw closes and use simple (arithmetic) returns.

use serde::{Deserialize, Serialize};

use crate::error::MathError;

/// Denominator used for standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StdKind {
    /// N - 1 denominator.
    #[default]
    Sample,
    /// N denominator.
    Population,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard deviation; `None` when there are too few values for `kind`.
pub fn std_dev(values: &[f64], kind: StdKind) -> Option<f64> {
    let n = values.len();
    let denom = match kind {
        StdKind::Sample if n >= 2 => (n - 1) as f64,
        StdKind::Population if n >= 1 => n as f64,
        _ => return None,
    };
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / denom).sqrt())
}

fn require_len(prices: &[f64], needed: usize) -> Result<(), MathError> {
    if prices.len() < needed {
        Err(MathError::TooShort {
            needed,
            got: prices.len(),
        })
    } else {
        Ok(())
    }
}

/// Simple daily returns `p[t] / p[t-1] - 1`.
pub fn daily_returns(prices: &[f64]) -> Result<Vec<f64>, MathError> {
    require_len(prices, 2)?;
    if let Some(p) = prices.iter().find(|p| !(**p > 0.0)) {
        return Err(MathError::NonPositive(*p));
    }
    Ok(prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawdownReading {
    pub peak_price: f64,
    /// 0-based index of the first occurrence of the window maximum.
    pub peak_index: usize,
    pub current_price: f64,
    pub drawdown_frac: f64,
}

/// Decline of the last price from the window maximum.
pub fn drawdown(prices: &[f64]) -> Result<DrawdownReading, MathError> {
    require_len(prices, 1)?;
    let (peak_index, peak_price) = prices
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p > best.1 { (i, p) } else { best });
    let current_price = prices[prices.len() - 1];
    Ok(DrawdownReading {
        peak_price,
        peak_index,
        current_price,
        drawdown_frac: (peak_price - current_price) / peak_price,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolReading {
    pub overall_vol: f64,
    pub recent_vol: f64,
    pub ratio: f64,
}

/// Standard deviation of all window returns vs. of the last `recent_days`
/// returns.
pub fn volatility_reading(prices: &[f64], recent_days: usize, kind: StdKind) -> Result<VolReading, MathError> {
    require_len(prices, recent_days + 1)?;
    let returns = daily_returns(prices)?;
    let recent = &returns[returns.len() - recent_days..];
    let too_short = || MathError::TooShort {
        needed: recent_days + 2,
        got: prices.len(),
    };
    let overall_vol = std_dev(&returns, kind).ok_or_else(too_short)?;
    let recent_vol = std_dev(recent, kind).ok_or_else(too_short)?;
    if overall_vol <= 0.0 {
        return Err(MathError::Degenerate("volatility"));
    }
    Ok(VolReading {
        overall_vol,
        recent_vol,
        ratio: recent_vol / overall_vol,
    })
}

/// `(last - first) / first`.
pub fn cumulative_return(prices: &[f64]) -> Result<f64, MathError> {
    require_len(prices, 2)?;
    let first = prices[0];
    if first <= 0.0 {
        return Err(MathError::NonPositive(first));
    }
    Ok((prices[prices.len() - 1] - first) / first)
}

/// Pearson correlation of two equal-length sample vectors.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, MathError> {
    if a.len() != b.len() {
        return Err(MathError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    require_len(a, 2)?;
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(MathError::Degenerate("correlation"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of the daily returns of two date-aligned windows.
pub fn return_correlation(a: &[f64], b: &[f64]) -> Result<f64, MathError> {
    if a.len() != b.len() {
        return Err(MathError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    require_len(a, 3)?;
    pearson(&daily_returns(a)?, &daily_returns(b)?)
}

/// Standardised daily returns over the whole window.
pub fn shock_zscores(prices: &[f64], kind: StdKind) -> Result<Vec<f64>, MathError> {
    require_len(prices, 3)?;
    let returns = daily_returns(prices)?;
    let m = mean(&returns);
    let sd = std_dev(&returns, kind).unwrap_or(0.0);
    if !(sd > 0.0) {
        return Err(MathError::Degenerate("return dispersion"));
    }
    Ok(returns.iter().map(|r| (r - m) / sd).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelKind {
    Support,
    Resistance,
}

impl LevelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LevelKind::Support => "support",
            LevelKind::Resistance => "resistance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyLevel {
    pub kind: LevelKind,
    pub level_price: f64,
    pub proximity_frac: f64,
}

/// Support (minimum) and resistance (maximum) over the `lookback` closes
/// preceding the final day, with proximity measured against the final close.
pub fn key_levels(prices: &[f64], lookback: usize) -> Result<(KeyLevel, KeyLevel), MathError> {
    require_len(prices, lookback + 1)?;
    if lookback == 0 {
        return Err(MathError::TooShort { needed: 1, got: 0 });
    }
    let n = prices.len();
    let current = prices[n - 1];
    let prior = &prices[n - 1 - lookback..n - 1];
    let lo = prior.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = prior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let level = |kind, level_price: f64| KeyLevel {
        kind,
        level_price,
        proximity_frac: (current - level_price).abs() / level_price,
    };
    Ok((level(LevelKind::Support, lo), level(LevelKind::Resistance, hi)))
}

/// Normalised spread `(a - b) / (a + b)`.
pub fn pair_spread(a_close: f64, b_close: f64) -> Result<f64, MathError> {
    for p in [a_close, b_close] {
        if !(p > 0.0) {
            return Err(MathError::NonPositive(p));
        }
    }
    Ok((a_close - b_close) / (a_close + b_close))
}

/// Rounds to whole cents.
pub fn round_cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
