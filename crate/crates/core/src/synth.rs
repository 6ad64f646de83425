//! Deterministic synthetic daily closes.
//!
//! One market factor plus an idiosyncratic component per ticker, both with
//! GARCH(1,1) variance; idiosyncratic shocks are Student-t(4) with occasional
//! jumps. Loadings span negative values so that all correlation classes occur.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::market::{PriceSeries, Universe};
use crate::math::round_cents;
use crate::task::mix_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub tickers: usize,
    pub start: NaiveDate,
    /// Business days per ticker.
    pub days: usize,
    pub seed: u64,
    pub market_vol: f64,
    pub jump_prob: f64,
    pub jump_size: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            tickers: 250,
            start: NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"),
            days: 4_000,
            seed: 7,
            market_vol: 0.014,
            jump_prob: 0.01,
            jump_size: 0.08,
        }
    }
}

/// Weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

pub fn ticker_name(i: usize) -> String {
    format!("SYN{i:03}")
}

struct Garch {
    omega: f64,
    alpha: f64,
    beta: f64,
    var: f64,
}

impl Garch {
    fn new(long_run_vol: f64, alpha: f64, beta: f64) -> Self {
        let var = long_run_vol * long_run_vol;
        Self {
            omega: var * (1.0 - alpha - beta),
            alpha,
            beta,
            var,
        }
    }

    fn step(&mut self, unit_shock: f64) -> f64 {
        let r = self.var.sqrt() * unit_shock;
        self.var = self.omega + self.alpha * r * r + self.beta * self.var;
        r
    }
}

pub fn synthetic_market(cfg: &SynthConfig) -> Vec<PriceSeries> {
    let dates = business_days(cfg.start, cfg.days);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let t4 = StudentT::new(4.0).expect("t(4)");
    // t(4) has variance 2.
    let t_scale = 0.5f64.sqrt();

    let mut market_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0));
    let mut market = Garch::new(cfg.market_vol, 0.08, 0.90);
    let factor: Vec<f64> = (0..cfg.days).map(|_| market.step(normal.sample(&mut market_rng))).collect();

    (0..cfg.tickers)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 1 + i as u64));
            let loading = rng.random_range(-0.8..1.2);
            let idio_vol = rng.random_range(0.006..0.020);
            let drift = rng.random_range(-0.0002..0.0006);
            let mut idio = Garch::new(idio_vol, rng.random_range(0.04..0.12), 0.85);
            let mut price: f64 = rng.random_range(20.0..300.0);
            let jump = Normal::new(0.0, cfg.jump_size).expect("jump size is finite");
            let mut closes = Vec::with_capacity(cfg.days);
            for f in &factor {
                let mut r = drift + loading * f + idio.step(t4.sample(&mut rng) * t_scale);
                if rng.random_bool(cfg.jump_prob) {
                    r += jump.sample(&mut rng);
                }
                price *= 1.0 + r.clamp(-0.5, 1.0);
                price = price.max(1.0);
                closes.push(round_cents(price));
            }
            PriceSeries::new(ticker_name(i), dates.clone(), closes).expect("synthetic series is valid")
        })
        .collect()
}

/// Universe over the synthetic tickers: the first `in_domain` are in-domain.
pub fn synthetic_universe(in_domain: usize, ood: usize) -> Universe {
    Universe::new((0..in_domain + ood).map(ticker_name).collect(), in_domain, ood).expect("distinct synthetic tickers")
}
