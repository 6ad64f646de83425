//! Seeded candidate generation over a split's price pool.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{PriceSeries, SplitName};
use crate::math::round_cents;

use super::label::label_task;
use super::prompt::build_question;
use super::{mix_seed, BenchConfig, Choice, HasGold, SeedTrace, TaskId, TaskSample};

/// Price series restricted to one split, with closes rounded to cents so that
/// labels are computed on exactly the numbers a prompt shows.
#[derive(Debug, Clone)]
pub struct SeriesPool {
    series: Vec<PriceSeries>,
}

impl SeriesPool {
    pub fn new(series: Vec<PriceSeries>) -> Self {
        let series = series
            .into_iter()
            .map(|mut s| {
                for c in &mut s.closes {
                    *c = round_cents(*c);
                }
                s
            })
            .collect();
        Self { series }
    }

    pub fn series(&self) -> &[PriceSeries] {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leg {
    pub series: usize,
    /// Index of the anchor (last window day) within that series.
    pub anchor: usize,
}

/// A labelled anchor. Prices and prompt text are rebuilt by [`materialize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Candidate {
    pub legs: Vec<Leg>,
    pub gold: Choice,
    pub draw: u64,
}

impl HasGold for Candidate {
    fn gold(&self) -> Choice {
        self.gold
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub draws: u64,
    pub accepted: usize,
    pub rejected_gap: u64,
    pub rejected_rule: u64,
    pub rejected_alignment: u64,
    pub warning: Option<String>,
}

/// Indices of `back` common dates ending at the shared anchor date, followed by
/// `fwd` common dates after it. `None` if either series runs out first.
fn align_pair(a: &PriceSeries, ia: usize, b: &PriceSeries, ib: usize, back: usize, fwd: usize) -> Option<(Vec<[usize; 2]>, Vec<[usize; 2]>)> {
    let mut window = Vec::with_capacity(back);
    let (mut i, mut j) = (ia as isize, ib as isize);
    while window.len() < back {
        if i < 0 || j < 0 {
            return None;
        }
        let (da, db) = (a.dates[i as usize], b.dates[j as usize]);
        if da == db {
            window.push([i as usize, j as usize]);
            i -= 1;
            j -= 1;
        } else if da > db {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    window.reverse();
    let mut forward = Vec::with_capacity(fwd);
    let (mut i, mut j) = (ia + 1, ib + 1);
    while forward.len() < fwd {
        if i >= a.len() || j >= b.len() {
            return None;
        }
        let (da, db) = (a.dates[i], b.dates[j]);
        if da == db {
            forward.push([i, j]);
            i += 1;
            j += 1;
        } else if da < db {
            i += 1;
        } else {
            j += 1;
        }
    }
    Some((window, forward))
}

struct Prices {
    windows: Vec<Vec<f64>>,
    forwards: Vec<Vec<f64>>,
    window_start: usize,
    forward_idx: Vec<usize>,
}

fn gather(pool: &SeriesPool, legs: &[Leg], w: usize, h: usize) -> Option<Prices> {
    let s = pool.series();
    match legs {
        [leg] => {
            let c = &s[leg.series].closes;
            if leg.anchor + 1 < w || leg.anchor + h >= c.len() {
                return None;
            }
            Some(Prices {
                windows: vec![c[leg.anchor + 1 - w..=leg.anchor].to_vec()],
                forwards: vec![c[leg.anchor + 1..=leg.anchor + h].to_vec()],
                window_start: leg.anchor + 1 - w,
                forward_idx: (leg.anchor + 1..=leg.anchor + h).collect(),
            })
        }
        [la, lb] => {
            let (a, b) = (&s[la.series], &s[lb.series]);
            let (win, fwd) = align_pair(a, la.anchor, b, lb.anchor, w, h)?;
            let pick = |idx: &[[usize; 2]], k: usize, src: &PriceSeries| idx.iter().map(|p| src.closes[p[k]]).collect::<Vec<f64>>();
            Some(Prices {
                windows: vec![pick(&win, 0, a), pick(&win, 1, b)],
                forwards: vec![pick(&fwd, 0, a), pick(&fwd, 1, b)],
                window_start: win[0][0],
                forward_idx: fwd.iter().map(|p| p[0]).collect(),
            })
        }
        _ => None,
    }
}

fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
    v.iter().map(Vec::as_slice).collect()
}

/// Seed of the draw stream for one (task, split) job.
pub fn job_seed(task: TaskId, split: SplitName, cfg: &BenchConfig) -> u64 {
    mix_seed(cfg.seed_for(task), 100 + split.index())
}

/// Draws anchors uniformly with the job seed until `raw_samples_per_task`
/// candidates are accepted or `max_draws` is spent. Output is sorted by
/// (ticker, anchor date, second ticker).
pub fn generate_task(pool: &SeriesPool, split: SplitName, task: TaskId, cfg: &BenchConfig) -> Result<(Vec<Candidate>, GenerationReport)> {
    let w = cfg.window_len;
    let h = task.horizon(cfg);
    let series = pool.series();
    let mut rng = ChaCha8Rng::seed_from_u64(job_seed(task, split, cfg));
    let mut report = GenerationReport::default();
    let mut out = Vec::new();
    // Valid anchor indices per series are w-1 ..= len-1-h.
    let valid: Vec<usize> = series.iter().map(|s| (s.len() + 1).saturating_sub(w + h)).collect();
    let mut cumulative = Vec::with_capacity(valid.len());
    let mut total = 0usize;
    for v in &valid {
        total += v;
        cumulative.push(total);
    }
    let pair = task.is_pair();
    if total == 0 || (pair && series.len() < 2) {
        report.warning = Some(format!("{task} on {split}: pool too small, achieved 0 of {}", cfg.raw_samples_per_task));
        return Ok((out, report));
    }
    let gap = cfg.min_stock_gap;
    let mut taken: HashMap<usize, BTreeSet<usize>> = HashMap::new();
    let too_close = |taken: &HashMap<usize, BTreeSet<usize>>, leg: &Leg| {
        taken.get(&leg.series).is_some_and(|set| {
            let lo = leg.anchor.saturating_sub(gap.saturating_sub(1));
            let hi = leg.anchor + gap.saturating_sub(1);
            gap > 0 && set.range(lo..=hi).next().is_some()
        })
    };

    while out.len() < cfg.raw_samples_per_task && (report.draws as usize) < cfg.max_draws {
        let draw = report.draws;
        report.draws += 1;
        let legs = if pair {
            let n = series.len();
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            if valid[i] == 0 {
                report.rejected_alignment += 1;
                continue;
            }
            let ia = w - 1 + rng.random_range(0..valid[i]);
            let Some(ib) = series[j].index_of(series[i].dates[ia]) else {
                report.rejected_alignment += 1;
                continue;
            };
            vec![Leg { series: i, anchor: ia }, Leg { series: j, anchor: ib }]
        } else {
            let u = rng.random_range(0..total);
            let s = cumulative.partition_point(|c| *c <= u);
            let before = if s == 0 { 0 } else { cumulative[s - 1] };
            vec![Leg {
                series: s,
                anchor: w - 1 + (u - before),
            }]
        };
        if legs.iter().any(|l| too_close(&taken, l)) {
            report.rejected_gap += 1;
            continue;
        }
        let Some(prices) = gather(pool, &legs, w, h) else {
            report.rejected_alignment += 1;
            continue;
        };
        let Some(labeled) = label_task(task, &refs(&prices.windows), &refs(&prices.forwards), cfg)? else {
            report.rejected_rule += 1;
            continue;
        };
        for l in &legs {
            taken.entry(l.series).or_default().insert(l.anchor);
        }
        out.push(Candidate {
            legs,
            gold: labeled.gold,
            draw,
        });
    }
    report.accepted = out.len();
    if out.len() < cfg.raw_samples_per_task {
        report.warning = Some(format!(
            "{task} on {split}: pool exhausted after {} draws, achieved {} of {}",
            report.draws,
            out.len(),
            cfg.raw_samples_per_task
        ));
    }
    out.sort_by(|x, y| {
        let key = |c: &Candidate| {
            c.legs
                .iter()
                .map(|l| (series[l.series].ticker.clone(), series[l.series].dates[l.anchor]))
                .collect::<Vec<_>>()
        };
        key(x).cmp(&key(y))
    });
    Ok((out, report))
}

/// Rebuilds the full sample for a candidate drawn from `pool`.
pub fn materialize(pool: &SeriesPool, candidate: &Candidate, task: TaskId, split: SplitName, cfg: &BenchConfig) -> Result<TaskSample> {
    let w = cfg.window_len;
    let h = task.horizon(cfg);
    let series = pool.series();
    let lead = candidate.legs[0];
    let lead_series = &series[lead.series];
    let prices = gather(pool, &candidate.legs, w, h).ok_or(Error::Window {
        anchor: lead.anchor,
        len: w,
        available: lead_series.len(),
    })?;
    let labeled = label_task(task, &refs(&prices.windows), &refs(&prices.forwards), cfg)?
        .ok_or_else(|| Error::Render(format!("{task} candidate no longer passes its inclusion rule")))?;
    if labeled.gold != candidate.gold {
        return Err(Error::Render(format!("{task} candidate relabelled {} as {}", candidate.gold, labeled.gold)));
    }
    let tickers: Vec<String> = candidate.legs.iter().map(|l| series[l.series].ticker.clone()).collect();
    let question = build_question(task, &tickers, &prices.windows, &labeled.aux, cfg);
    let forward_dates = match (prices.forward_idx.first(), prices.forward_idx.last()) {
        (Some(f), Some(l)) if h > 0 => Some((lead_series.dates[*f], lead_series.dates[*l])),
        _ => None,
    };
    Ok(TaskSample {
        task,
        category: task.category(),
        tickers,
        split,
        window_start: lead_series.dates[prices.window_start],
        anchor_date: lead_series.dates[lead.anchor],
        horizon_days: h,
        forward_dates,
        question,
        choices: task.choice_texts().iter().map(|s| s.to_string()).collect(),
        gold: labeled.gold,
        windows: prices.windows,
        forwards: if h > 0 { prices.forwards } else { Vec::new() },
        aux: labeled.aux,
        seed_trace: SeedTrace {
            seed: job_seed(task, split, cfg),
            draw: candidate.draw,
        },
    })
}

/// Labels caller-supplied prices as a sample, outside any split or corpus.
///
/// Prices are rounded to cents first. `forwards` may be empty for
/// assessment tasks. Returns `None` when the windows fail the task's
/// inclusion rule. Dates are left at the Unix epoch.
pub fn sample_from_prices(
    task: TaskId,
    tickers: &[&str],
    windows: Vec<Vec<f64>>,
    forwards: Vec<Vec<f64>>,
    cfg: &BenchConfig,
) -> Result<Option<TaskSample>> {
    let legs = if task.is_pair() { 2 } else { 1 };
    if windows.len() != legs || tickers.len() != legs {
        return Err(Error::Config(format!("{task} needs {legs} window(s) and ticker(s)")));
    }
    let h = task.horizon(cfg);
    if h > 0 && (forwards.len() != legs || forwards.iter().any(|f| f.len() != h)) {
        return Err(Error::Config(format!("{task} needs {legs} forward path(s) of {h} days")));
    }
    let round = |v: Vec<Vec<f64>>| -> Vec<Vec<f64>> { v.into_iter().map(|s| s.into_iter().map(round_cents).collect()).collect() };
    let windows = round(windows);
    let forwards = if h > 0 { round(forwards) } else { Vec::new() };
    let Some(labeled) = label_task(task, &refs(&windows), &refs(&forwards), cfg)? else {
        return Ok(None);
    };
    let tickers: Vec<String> = tickers.iter().map(|t| t.to_string()).collect();
    let question = build_question(task, &tickers, &windows, &labeled.aux, cfg);
    let epoch = chrono::NaiveDate::default();
    Ok(Some(TaskSample {
        task,
        category: task.category(),
        tickers,
        split: SplitName::Train,
        window_start: epoch,
        anchor_date: epoch,
        horizon_days: h,
        forward_dates: None,
        question,
        choices: task.choice_texts().iter().map(|s| s.to_string()).collect(),
        gold: labeled.gold,
        windows,
        forwards,
        aux: labeled.aux,
        seed_trace: SeedTrace { seed: 0, draw: 0 },
    }))
}
