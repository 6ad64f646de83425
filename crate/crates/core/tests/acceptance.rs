//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::Instant;

use finbench_core::config::RunConfig;
use finbench_core::corpus::{encode_corpus, sha256_hex, CorpusRecord};
use finbench_core::cot::{chain_stats, check_wrapper, inject_fault, render_chain, scenario_section, verify_arithmetic, ScenarioTemplates};
use finbench_core::eval::random_baseline;
use finbench_core::forecast::{classify_from_forecast, forecast_sample, run_baseline, ForecastMethod};
use finbench_core::market::SplitName;
use finbench_core::pipeline::{Build, BuildFilter};
use finbench_core::task::{sample_from_prices, BenchConfig, Choice, TaskId, TaskSample};

use common::{build, oracle, path_from_returns, synthetic_config};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn standard_config() -> RunConfig {
    synthetic_config(150, 3000, 20_000, 200_000)
}

/// Full build shared by the corpus-level criteria.
fn standard_build() -> &'static (RunConfig, Build) {
    static CELL: OnceLock<(RunConfig, Build)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = standard_config();
        let b = build(&cfg, &BuildFilter::default());
        (cfg, b)
    })
}

fn by_task(records: &[CorpusRecord]) -> BTreeMap<TaskId, Vec<&CorpusRecord>> {
    let mut m: BTreeMap<TaskId, Vec<&CorpusRecord>> = BTreeMap::new();
    for r in records {
        m.entry(r.sample.task).or_default().push(r);
    }
    m
}

fn oracle_equivalence() -> Verdict {
    let t = Instant::now();
    let (cfg, b) = standard_build();
    let groups = by_task(&b.records);
    let mut notes = Vec::new();
    let mut ok = groups.len() == TaskId::ALL.len();
    for task in TaskId::ALL {
        let recs = groups.get(&task).map(Vec::as_slice).unwrap_or(&[]);
        let agree = recs
            .iter()
            .filter(|r| oracle::label(&r.sample, &cfg.bench) == Some(r.sample.gold))
            .count();
        ok &= recs.len() >= 1000 && agree == recs.len();
        notes.push(format!("{}={}/{}", task.short_name(), agree, recs.len()));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    verdict(ok, format!("{} in {secs:.1}s", notes.join(" ")))
}

fn single(task: TaskId, window: Vec<f64>, forward: Option<Vec<f64>>) -> TaskSample {
    let cfg = BenchConfig::default();
    let forwards = forward.map(|f| vec![f]).unwrap_or_default();
    sample_from_prices(task, &["XYZ"], vec![window], forwards, &cfg)
        .expect("valid sample input")
        .expect("sample passes inclusion")
}

fn chain_text(s: &TaskSample) -> String {
    render_chain(s, &ScenarioTemplates::builtin()).expect("chain renders").rendered
}

/// Window of `len` closes that rises linearly to `peak` at index `peak_at`
/// and then falls linearly to `end`.
fn tent(len: usize, start: f64, peak: f64, peak_at: usize, end: f64) -> Vec<f64> {
    (0..len)
        .map(|i| {
            if i <= peak_at {
                start + (peak - start) * i as f64 / peak_at as f64
            } else {
                peak + (end - peak) * (i - peak_at) as f64 / (len - 1 - peak_at) as f64
            }
        })
        .collect()
}

/// Searches alternating-return windows for one whose volatility chain prints
/// `recent / overall = ratio` exactly.
fn vol_example(recent: f64, overall: f64, want: &str) -> Option<TaskSample> {
    let b0 = recent * (19.0f64 / 20.0).sqrt();
    let a0 = ((118.0 * overall * overall - 20.0 * b0 * b0) / 99.0).sqrt();
    for i in 0..60 {
        for j in 0..60 {
            let a = a0 * (1.0 + (i as f64 - 30.0) * 0.0005);
            let b = b0 * (1.0 + (j as f64 - 30.0) * 0.0005);
            let rets: Vec<f64> = (0..119)
                .map(|k| {
                    let m = if k < 99 { a } else { b };
                    if k % 2 == 0 {
                        m
                    } else {
                        -m
                    }
                })
                .collect();
            let w = path_from_returns(100.0, &rets);
            let s = single(TaskId::VolatilityRegime, w, None);
            if chain_text(&s).contains(want) {
                return Some(s);
            }
        }
    }
    None
}

fn worked_examples() -> Verdict {
    let mut fails = Vec::new();
    let check = |name: &str, s: &TaskSample, needles: &[&str], gold: Choice| -> Option<String> {
        let text = chain_text(s);
        let missing: Vec<&str> = needles.iter().copied().filter(|n| !text.contains(n)).collect();
        (!missing.is_empty() || s.gold != gold || check_wrapper(&text).ok() != Some(gold))
            .then(|| format!("{name}: gold {} missing {missing:?}", s.gold))
    };

    let dd = single(TaskId::Drawdown, tent(120, 150.0, 170.39, 80, 162.65), None);
    fails.extend(check("drawdown", &dd, &["(170.39 - 162.65) / 170.39 = 4.5%"], Choice::B));

    let tr = single(TaskId::TrendDirection, tent(120, 30.27, 31.0, 10, 22.47), None);
    fails.extend(check("trend", &tr, &["(22.47 - 30.27) / 30.27 = -25.8%"], Choice::E));

    // peak 62 days before the last close, forward path drifting lower
    let w = tent(120, 13.0, 16.18, 119 - 62, 12.07);
    let fwd: Vec<f64> = (1..=20).map(|i| 12.07 - 0.02 * i as f64).collect();
    let ddr = single(TaskId::DrawdownRecovery, w, Some(fwd));
    fails.extend(check(
        "drawdown recovery",
        &ddr,
        &["Drawdown: 25.4% (peak=16.18, current=12.07).", "Peak was 62 days ago."],
        Choice::B,
    ));

    for (r, o, want, gold) in [(1.50, 2.02, "Ratio = 1.50 / 2.02 = 0.74", Choice::B), (10.75, 4.51, "Ratio = 10.75 / 4.51 = 2.38", Choice::C)] {
        match vol_example(r / 100.0, o / 100.0, want) {
            Some(s) => fails.extend(check("volatility", &s, &[want], gold)),
            None => fails.push(format!("volatility: no window prints {want:?}")),
        }
    }
    verdict(fails.is_empty(), if fails.is_empty() { "5/5 examples".into() } else { fails.join("; ") })
}

fn class_balance() -> Verdict {
    let (_, b) = standard_build();
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    let mut ok = true;
    for task in TaskId::ALL {
        let mut counts = vec![0usize; task.n_choices()];
        for r in b.records.iter().filter(|r| r.sample.split == SplitName::Train && r.sample.task == task) {
            counts[r.sample.gold.index()] += 1;
        }
        let n: usize = counts.iter().sum();
        let uniform = 100.0 / counts.len() as f64;
        let dev = counts
            .iter()
            .map(|c| (100.0 * *c as f64 / n.max(1) as f64 - uniform).abs())
            .fold(0.0, f64::max);
        ok &= n > 0 && dev <= 3.0;
        worst = worst.max(dev);
        notes.push(format!("{}:{n}", task.short_name()));
    }
    verdict(ok, format!("max deviation {worst:.2}pp ({})", notes.join(" ")))
}

fn arithmetic_faithfulness() -> Verdict {
    let (_, b) = standard_build();
    let chains: Vec<&str> = b
        .records
        .iter()
        .filter(|r| !r.sample.task.is_prediction())
        .filter_map(|r| r.cot.as_deref())
        .collect();
    let checks: usize = chains.iter().map(|c| verify_arithmetic(c).len()).sum();
    let bad = chains.iter().filter(|c| verify_arithmetic(c).iter().any(|x| !x.ok)).count();
    let tampered: Vec<String> = chains.iter().filter_map(|c| inject_fault(c)).take(100).collect();
    let flagged = tampered.iter().filter(|t| verify_arithmetic(t).iter().any(|x| !x.ok)).count();
    verdict(
        !chains.is_empty() && bad == 0 && tampered.len() == 100 && flagged == 100,
        format!(
            "{}/{} chains clean ({checks} results); {flagged}/{} faults flagged",
            chains.len() - bad,
            chains.len(),
            tampered.len()
        ),
    )
}

fn cot_structure() -> Verdict {
    let (_, b) = standard_build();
    let with_cot: Vec<&CorpusRecord> = b.records.iter().filter(|r| r.cot.is_some()).collect();
    let wrapped = with_cot
        .iter()
        .filter(|r| check_wrapper(r.cot.as_deref().unwrap()).ok() == Some(r.sample.gold))
        .count();
    let prediction: Vec<&str> = with_cot
        .iter()
        .filter(|r| r.sample.task.is_prediction())
        .map(|r| r.cot.as_deref().unwrap())
        .collect();
    let three = prediction
        .iter()
        .filter(|c| {
            scenario_section(c).is_some_and(|s| s.lines().filter(|l| l.trim_start().starts_with("- ")).count() == 3)
        })
        .count();
    let stats = chain_stats(&b.records);
    let ratio = stats.length_ratio.unwrap_or(0.0);
    verdict(
        with_cot.len() >= 1000 && wrapped == with_cot.len() && three == prediction.len() && (1.8..=3.0).contains(&ratio),
        format!(
            "wrapper {wrapped}/{}, three scenarios {three}/{}, length ratio {ratio:.2} ({:.1} vs {:.1} words)",
            with_cot.len(),
            prediction.len(),
            stats.scenario_aware.mean_words,
            stats.compute_in_cot.mean_words
        ),
    )
}

fn random_calibration() -> Verdict {
    let mut cfg = synthetic_config(400, 4200, 60_000, 2_000_000);
    cfg.bench.cap_test = 10_000;
    let b = build(
        &cfg,
        &BuildFilter {
            tasks: Vec::new(),
            splits: vec![SplitName::TestA],
        },
    );
    let report = random_baseline(&b.records, 7);
    let mut ok = report.tasks.len() == TaskId::ALL.len();
    let mut notes = Vec::new();
    for (task, s) in &report.tasks {
        let expect = 100.0 / task.n_choices() as f64;
        let got = 100.0 * s.accuracy;
        ok &= s.n >= 1000 && (got - expect).abs() <= 2.0;
        notes.push(format!("{}={got:.1}/{expect:.1} (n={})", task.short_name(), s.n));
    }
    let agg = 100.0 * report.average_accuracy;
    let expect_agg = TaskId::ALL.iter().map(|t| 100.0 / t.n_choices() as f64).sum::<f64>() / TaskId::ALL.len() as f64;
    ok &= (agg - expect_agg).abs() <= 2.0 && (agg - 41.2).abs() <= 2.0;
    verdict(ok, format!("aggregate {agg:.2} vs {expect_agg:.2}; {}", notes.join(" ")))
}

fn forecast_consistency() -> Verdict {
    let (cfg, b) = standard_build();
    let mut ok = true;
    let mut notes = Vec::new();
    for task in TaskId::PREDICTION {
        let recs: Vec<&CorpusRecord> = b.records.iter().filter(|r| r.sample.task == task).collect();
        let hits = recs
            .iter()
            .filter(|r| {
                let paths = forecast_sample(ForecastMethod::PerfectFuture, &r.sample, &cfg.forecast).expect("paths");
                classify_from_forecast(&r.sample, &paths, &cfg.bench).expect("choice") == r.sample.gold
            })
            .count();
        ok &= !recs.is_empty() && hits == recs.len();
        notes.push(format!("{}={hits}/{}", task.short_name(), recs.len()));
    }
    let vf: Vec<&CorpusRecord> = b.records.iter().filter(|r| r.sample.task == TaskId::VolatilityForecast).collect();
    let decrease = vf
        .iter()
        .filter(|r| {
            let paths = forecast_sample(ForecastMethod::LastValue, &r.sample, &cfg.forecast).expect("paths");
            classify_from_forecast(&r.sample, &paths, &cfg.bench).expect("choice") == Choice::B
        })
        .count();
    ok &= decrease == vf.len();
    verdict(ok, format!("perfect future {}; LastValue VF decrease {decrease}/{}", notes.join(" "), vf.len()))
}

fn determinism() -> Verdict {
    let mut cfg = synthetic_config(60, 2600, 4_000, 40_000);
    let hash = |cfg: &RunConfig| sha256_hex(&encode_corpus(&build(cfg, &BuildFilter::default()).records).expect("encodes"));
    let first = hash(&cfg);
    let second = hash(&cfg);
    cfg.parallel = false;
    let serial = hash(&cfg);
    verdict(
        first == second && first == serial,
        format!("parallel {} / {} / serial {}", &first[..12], &second[..12], &serial[..12]),
    )
}

/// Test A accuracies of the statistical baselines on large-cap US equities.
const REFERENCE: [(ForecastMethod, [f64; 6]); 5] = [
    (ForecastMethod::LastValue, [42.7, 61.7, 49.9, 48.0, 48.5, 50.3]),
    (ForecastMethod::Ets, [49.2, 62.1, 46.3, 48.0, 49.5, 54.6]),
    (ForecastMethod::MovingAverage, [51.2, 60.1, 45.1, 50.6, 50.8, 59.0]),
    (ForecastMethod::Momentum, [49.5, 68.9, 57.1, 48.0, 49.7, 50.5]),
    (ForecastMethod::Drift, [52.9, 71.0, 63.5, 48.0, 48.4, 50.3]),
];

fn real_data_baselines() -> Verdict {
    let (Ok(prices), Ok(universe)) = (std::env::var("FINBENCH_SP500_PRICES"), std::env::var("FINBENCH_SP500_UNIVERSE")) else {
        return Verdict::Skip("set FINBENCH_SP500_PRICES and FINBENCH_SP500_UNIVERSE to run".into());
    };
    let mut cfg = RunConfig::default();
    cfg.data.prices = Some(PathBuf::from(prices));
    cfg.data.universe = Some(PathBuf::from(universe));
    let b = build(
        &cfg,
        &BuildFilter {
            tasks: TaskId::PREDICTION.to_vec(),
            splits: vec![SplitName::TestA],
        },
    );
    let mut ok = true;
    let mut notes = Vec::new();
    for (method, row) in REFERENCE {
        let report = run_baseline(method, &b.records, &cfg.bench, &cfg.forecast).expect("baseline runs");
        for (task, want) in TaskId::PREDICTION.iter().zip(row) {
            let got = report.tasks.get(task).map_or(f64::NAN, |s| 100.0 * s.accuracy);
            if !((got - want).abs() <= 3.0) {
                ok = false;
                notes.push(format!("{} {}={got:.1} (want {want})", method.name(), task.short_name()));
            }
        }
    }
    verdict(ok, if ok { "30/30 cells within 3pp".into() } else { notes.join("; ") })
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("1 labeler-oracle equivalence", oracle_equivalence),
        ("2 worked-example reproduction", worked_examples),
        ("3 train class balance", class_balance),
        ("4 arithmetic faithfulness", arithmetic_faithfulness),
        ("5 reasoning-chain structure", cot_structure),
        ("6 random-baseline calibration", random_calibration),
        ("7 forecast-then-classify consistency", forecast_consistency),
        ("8 determinism", determinism),
        ("9 real-data statistical baselines", real_data_baselines),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::Fail(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match v {
            Verdict::Pass(d) => println!("PASS  criterion {name} [{secs:.1}s]: {d}"),
            Verdict::Skip(d) => println!("SKIP  criterion {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL  criterion {name} [{secs:.1}s]: {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}
