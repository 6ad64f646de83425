//! End-to-end corpus build: prices, splits, per-(task, split) generation,
//! balancing, rendering and reasoning chains.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::CorpusRecord;
use crate::cot::{render_chain, ScenarioTemplates};
use crate::error::{Error, Result};
use crate::market::{
    assign_splits, date_span, load_price_table, load_universe, restrict_to_split, PriceSeries, SplitName, SplitSpec,
    SplitsManifest, Universe,
};
use crate::synth::{synthetic_market, synthetic_universe};
use crate::task::{balance_and_cap, generate_task, job_seed, materialize, mix_seed, BalanceReport, GenerationReport, SeriesPool, TaskId};

/// Prices plus the ranked universe they belong to.
#[derive(Debug, Clone)]
pub struct Market {
    pub series: Vec<PriceSeries>,
    pub universe: Universe,
}

/// Loads the configured price table, or builds the synthetic market.
pub fn load_market(cfg: &RunConfig) -> Result<Market> {
    let d = &cfg.data;
    if d.synthetic {
        return Ok(Market {
            series: synthetic_market(&d.synth),
            universe: synthetic_universe(d.in_domain_count, d.ood_count),
        });
    }
    let prices = d
        .prices
        .as_deref()
        .ok_or_else(|| Error::Config("data.prices is not set".into()))?;
    let series = load_price_table(prices, &d.columns)?;
    let universe = match &d.universe {
        Some(path) => load_universe(path, d.in_domain_count, d.ood_count)?,
        None => {
            // Without a ranking, fall back to ticker order.
            tracing::warn!("no universe file given; ranking tickers alphabetically");
            Universe::new(series.iter().map(|s| s.ticker.clone()).collect(), d.in_domain_count, d.ood_count)?
        }
    };
    Ok(Market { series, universe })
}

/// Partitions the market into the four splits.
pub fn split_market(market: &Market, cfg: &RunConfig) -> Result<SplitsManifest> {
    let (lo, hi) = date_span(&market.series).ok_or_else(|| Error::Config("market has no prices".into()))?;
    let start = cfg.splits.start.map_or(lo, |s| s.max(lo));
    let end = cfg.splits.end.map_or(hi, |e| e.min(hi));
    let splits = assign_splits(&market.universe, cfg.splits.boundary, start, end)?;
    Ok(SplitsManifest {
        boundary: cfg.splits.boundary,
        splits,
    })
}

/// Bookkeeping for one (task, split) job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub task: TaskId,
    pub split: SplitName,
    pub generation: GenerationReport,
    pub balance: BalanceReport,
}

#[derive(Debug, Clone)]
pub struct Build {
    pub records: Vec<CorpusRecord>,
    pub jobs: Vec<JobReport>,
    pub splits: SplitsManifest,
}

/// Restricts a build to some tasks or splits. Empty lists mean all.
#[derive(Debug, Clone, Default)]
pub struct BuildFilter {
    pub tasks: Vec<TaskId>,
    pub splits: Vec<SplitName>,
}

impl BuildFilter {
    fn wants_task(&self, t: TaskId) -> bool {
        self.tasks.is_empty() || self.tasks.contains(&t)
    }

    fn wants_split(&self, s: SplitName) -> bool {
        self.splits.is_empty() || self.splits.contains(&s)
    }
}

fn run_job(
    pool: &SeriesPool,
    spec: &SplitSpec,
    task: TaskId,
    cfg: &RunConfig,
    templates: &ScenarioTemplates,
) -> Result<(Vec<CorpusRecord>, JobReport)> {
    let bench = &cfg.bench;
    let split = spec.name;
    let (candidates, generation) = generate_task(pool, split, task, bench)?;
    let seed = mix_seed(job_seed(task, split, bench), 0xBA1A);
    let (kept, balance) = balance_and_cap(candidates, task.n_choices(), bench.cap_for(split), seed);
    let with_cot = cfg.cot.enabled && split == SplitName::Train;
    let mut records = Vec::with_capacity(kept.len());
    for cand in &kept {
        let sample = materialize(pool, cand, task, split, bench)?;
        let cot = if with_cot {
            Some(render_chain(&sample, templates)?.rendered)
        } else {
            None
        };
        records.push(CorpusRecord::new(sample, cot));
    }
    if balance.missing_class {
        tracing::warn!(%task, %split, supply = ?balance.supply, "a class has no supply; output is not balanced");
    }
    Ok((
        records,
        JobReport {
            task,
            split,
            generation,
            balance,
        },
    ))
}

/// Builds the corpus. Records are ordered by split, then task, then the
/// balanced draw order, so serial and parallel builds are byte-identical.
pub fn build_corpus(market: &Market, cfg: &RunConfig, filter: &BuildFilter) -> Result<Build> {
    cfg.bench.validate()?;
    let templates = match &cfg.cot.templates {
        Some(path) => ScenarioTemplates::load(path)?,
        None => ScenarioTemplates::builtin(),
    };
    let manifest = split_market(market, cfg)?;
    let specs: Vec<&SplitSpec> = manifest.splits.iter().filter(|s| filter.wants_split(s.name)).collect();
    let pools: Vec<SeriesPool> = specs
        .iter()
        .map(|s| SeriesPool::new(restrict_to_split(&market.series, s)))
        .collect();
    let jobs: Vec<(usize, TaskId)> = (0..specs.len())
        .flat_map(|i| TaskId::ALL.iter().copied().filter(|t| filter.wants_task(*t)).map(move |t| (i, t)))
        .collect();
    let run = |&(i, task): &(usize, TaskId)| run_job(&pools[i], specs[i], task, cfg, &templates);

    #[cfg(feature = "parallel")]
    let results: Vec<Result<_>> = if cfg.parallel {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<_>> = jobs.iter().map(run).collect();

    let mut records = Vec::new();
    let mut reports = Vec::new();
    for r in results {
        let (recs, report) = r?;
        records.extend(recs);
        reports.push(report);
    }
    Ok(Build {
        records,
        jobs: reports,
        splits: manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{encode_corpus, sha256_hex};
    use crate::synth::SynthConfig;
    use chrono::NaiveDate;

    pub(crate) fn tiny_config() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.data.synthetic = true;
        cfg.data.synth = SynthConfig {
            tickers: 6,
            days: 900,
            ..SynthConfig::default()
        };
        cfg.data.in_domain_count = 4;
        cfg.data.ood_count = 2;
        cfg.splits.boundary = NaiveDate::from_ymd_opt(2012, 6, 30).unwrap();
        cfg.bench.raw_samples_per_task = 200;
        cfg.bench.max_draws = 4_000;
        cfg.bench.cap_train = 40;
        cfg.bench.cap_test = 20;
        cfg
    }

    #[test]
    fn serial_and_parallel_agree() {
        let mut cfg = tiny_config();
        let market = load_market(&cfg).unwrap();
        let filter = BuildFilter::default();
        let a = build_corpus(&market, &cfg, &filter).unwrap();
        cfg.parallel = false;
        let b = build_corpus(&market, &cfg, &filter).unwrap();
        assert!(!a.records.is_empty());
        assert_eq!(
            sha256_hex(&encode_corpus(&a.records).unwrap()),
            sha256_hex(&encode_corpus(&b.records).unwrap())
        );
        assert_eq!(a.jobs, b.jobs);
    }

    #[test]
    fn caps_and_filters_hold() {
        let cfg = tiny_config();
        let market = load_market(&cfg).unwrap();
        let filter = BuildFilter {
            tasks: vec![TaskId::TrendDirection, TaskId::PairConvergence],
            splits: vec![SplitName::Train, SplitName::TestC],
        };
        let build = build_corpus(&market, &cfg, &filter).unwrap();
        assert_eq!(build.jobs.len(), 4);
        for j in &build.jobs {
            let n = build.records.iter().filter(|r| r.sample.task == j.task && r.sample.split == j.split).count();
            assert!(n <= cfg.bench.cap_for(j.split));
        }
        let train_cot = build.records.iter().filter(|r| r.sample.split == SplitName::Train).all(|r| r.cot.is_some());
        let test_cot = build.records.iter().filter(|r| r.sample.split != SplitName::Train).all(|r| r.cot.is_none());
        assert!(train_cot && test_cot);
    }
}
