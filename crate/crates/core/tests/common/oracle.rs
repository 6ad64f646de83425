//! Straight-line reimplementation of every labelling rule.
//!
//! Price-ratio thresholds are decided in exact integer arithmetic on cents;
//! volatility, correlation and z-scores use plain floating-point sums.

use finbench_core::math::StdKind;
use finbench_core::task::{BenchConfig, Choice, TaskId, TaskSample};

fn cents(p: f64) -> i128 {
    (p * 100.0).round() as i128
}

fn returns(p: &[f64]) -> Vec<f64> {
    (1..p.len()).map(|i| p[i] / p[i - 1] - 1.0).collect()
}

fn sample_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// One-pass Pearson sum formula.
fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Threshold as an exact ratio over 10^6.
fn ppm(x: f64) -> i128 {
    (x * 1e6).round() as i128
}

const M: i128 = 1_000_000;

fn letter(i: usize) -> Choice {
    Choice::from_index(i).unwrap()
}

/// Oracle label, or `None` when the sample should have been excluded.
pub fn label(s: &TaskSample, cfg: &BenchConfig) -> Option<Choice> {
    label_prices(s.task, &s.windows, &s.forwards, cfg)
}

/// Same as [`label`] on bare price lists, which must already be in cents.
pub fn label_prices(task: TaskId, windows: &[Vec<f64>], forwards: &[Vec<f64>], cfg: &BenchConfig) -> Option<Choice> {
    assert_eq!(cfg.std_kind, StdKind::Sample, "oracle implements the sample std only");
    let k = cfg.recent_vol_days;
    let w = &windows[0];
    let c: Vec<i128> = w.iter().map(|p| cents(*p)).collect();
    let n = c.len();
    let cur = c[n - 1];
    match task {
        TaskId::Drawdown => {
            let peak = *c.iter().max().unwrap();
            let drop = 100 * (peak - cur);
            Some(letter(if drop < 3 * peak {
                0
            } else if drop < 10 * peak {
                1
            } else if drop < 20 * peak {
                2
            } else {
                3
            }))
        }
        TaskId::VolatilityRegime => {
            let r = returns(w);
            let ratio = sample_std(&r[r.len() - k..]) / sample_std(&r);
            Some(letter(if ratio < 0.6 {
                0
            } else if ratio <= 1.6 {
                1
            } else {
                2
            }))
        }
        TaskId::TrendDirection => {
            let (start, end) = (c[0], cur);
            let m = 100 * (end - start);
            Some(letter(if m > 20 * start {
                0
            } else if m > 5 * start {
                1
            } else if m >= -5 * start {
                2
            } else if m >= -20 * start {
                3
            } else {
                4
            }))
        }
        TaskId::Correlation => {
            let rho = pearson(&returns(w), &returns(&windows[1]));
            Some(letter(if rho > cfg.corr_pos {
                0
            } else if rho < cfg.corr_neg {
                1
            } else {
                2
            }))
        }
        TaskId::EventResponse => {
            let r = returns(w);
            let m = r.iter().sum::<f64>() / r.len() as f64;
            let z = (r[r.len() - 1] - m) / sample_std(&r);
            if z.abs() <= cfg.event_z {
                return None;
            }
            let event = (cur - c[n - 2]).signum();
            let fwd = (cents(*forwards[0].last().unwrap()) - cur).signum();
            Some(if fwd != 0 && fwd == event { Choice::B } else { Choice::A })
        }
        TaskId::SupportResistance => {
            let prior = &c[n - 1 - cfg.sr_lookback..n - 1];
            let sup = *prior.iter().min().unwrap();
            let res = *prior.iter().max().unwrap();
            let ds = (cur - sup).abs();
            let dr = (cur - res).abs();
            // nearer level; ties go to support
            let (level, is_res) = if ds * res <= dr * sup { (sup, false) } else { (res, true) };
            if M * (cur - level).abs() > ppm(cfg.sr_proximity) * level {
                return None;
            }
            let broke = forwards[0].iter().map(|p| cents(*p)).any(|f| {
                if is_res {
                    M * (f - level) > ppm(cfg.sr_breakout) * level
                } else {
                    M * (level - f) > ppm(cfg.sr_breakout) * level
                }
            });
            Some(if broke { Choice::A } else { Choice::B })
        }
        TaskId::DrawdownRecovery => {
            let peak = *c.iter().max().unwrap();
            if M * (peak - cur) <= ppm(cfg.ddr_min_drawdown) * peak {
                return None;
            }
            let best = forwards[0].iter().map(|p| cents(*p)).max().unwrap();
            Some(if M * (best - cur) >= ppm(cfg.ddr_toward_peak) * cur { Choice::A } else { Choice::B })
        }
        TaskId::VolatilityForecast => {
            let r = returns(w);
            let recent = sample_std(&r[r.len() - k..]);
            if recent <= 0.0 {
                return None;
            }
            let mut path = vec![w[n - 1]];
            path.extend_from_slice(&forwards[0]);
            let fwd = sample_std(&returns(&path));
            Some(if fwd > (1.0 + cfg.vf_change) * recent { Choice::A } else { Choice::B })
        }
        TaskId::RelativePerformance => {
            let b: Vec<i128> = windows[1].iter().map(|p| cents(*p)).collect();
            let (ca, cb) = (cur, b[b.len() - 1]);
            let fa = cents(*forwards[0].last().unwrap());
            let fb = cents(*forwards[1].last().unwrap());
            // (fa/ca - fb/cb) * ca * cb
            let num = (fa - ca) * cb - (fb - cb) * ca;
            if M * num.abs() < ppm(cfg.relperf_margin) * ca * cb {
                return None;
            }
            Some(if num > 0 { Choice::A } else { Choice::B })
        }
        TaskId::PairConvergence => {
            let b: Vec<i128> = windows[1].iter().map(|p| cents(*p)).collect();
            let (a0, b0) = (cur, b[b.len() - 1]);
            if M * (a0 - b0).abs() < ppm(cfg.pc_margin) * (a0 + b0) {
                return None;
            }
            let fa = cents(*forwards[0].last().unwrap());
            let fb = cents(*forwards[1].last().unwrap());
            let later = (fa - fb).abs() * (a0 + b0);
            let now = (a0 - b0).abs() * (fa + fb);
            Some(if later < now { Choice::A } else { Choice::B })
        }
    }
}
