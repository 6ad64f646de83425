//! Shared fixtures for integration and acceptance tests.
#![allow(dead_code)]

pub mod oracle;

use chrono::NaiveDate;
use finbench_core::config::RunConfig;
use finbench_core::pipeline::{build_corpus, load_market, Build, BuildFilter};
use finbench_core::synth::SynthConfig;

/// Synthetic run config; 80% of tickers in-domain, boundary at 2018-01-01.
pub fn synthetic_config(tickers: usize, days: usize, raw: usize, draws: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.data.synthetic = true;
    cfg.data.synth = SynthConfig {
        tickers,
        days,
        ..SynthConfig::default()
    };
    cfg.data.in_domain_count = tickers * 4 / 5;
    cfg.data.ood_count = tickers - tickers * 4 / 5;
    cfg.splits.boundary = NaiveDate::from_ymd_opt(2018, 1, 1).unwrap();
    cfg.bench.raw_samples_per_task = raw;
    cfg.bench.max_draws = draws;
    cfg.bench.cap_train = cfg.bench.cap_train.min(raw);
    cfg.bench.cap_test = cfg.bench.cap_test.min(raw);
    cfg
}

pub fn build(cfg: &RunConfig, filter: &BuildFilter) -> Build {
    let market = load_market(cfg).expect("market loads");
    build_corpus(&market, cfg, filter).expect("corpus builds")
}

/// Prices following `returns` from `start`, rounded to cents.
pub fn path_from_returns(start: f64, returns: &[f64]) -> Vec<f64> {
    let mut p = start;
    let mut out = vec![start];
    for r in returns {
        p *= 1.0 + r;
        out.push((p * 100.0).round() / 100.0);
    }
    out
}

/// Small build with every split populated, for I/O and adapter tests.
pub fn tiny_build() -> Build {
    let mut cfg = synthetic_config(10, 2600, 400, 8_000);
    cfg.bench.cap_train = 20;
    cfg.bench.cap_test = 10;
    build(&cfg, &BuildFilter::default())
}
