//! Browser demo: draw a labelled sample from a synthetic market, label your
//! own prices, and run a forecaster against a sample's gold answer.
//!
//! Every export takes and returns JSON strings. The `demo` functions hold the
//! logic and run natively; the `#[wasm_bindgen]` wrappers only convert errors.

use wasm_bindgen::prelude::*;

pub mod demo {
    use finbench_core::cot::{render_chain, ScenarioTemplates};
    use finbench_core::forecast::{classify_from_forecast, forecast_sample, ForecastMethod, ForecastParams};
    use finbench_core::plot::window_svg;
    use finbench_core::synth::{synthetic_market, SynthConfig};
    use finbench_core::task::{sample_from_prices, BenchConfig, TaskId, TaskSample};
    use serde::Serialize;

    const DAYS: usize = 1500;

    #[derive(Serialize)]
    struct View<'a> {
        prompt: String,
        gold: char,
        cot: String,
        svg: String,
        sample: &'a TaskSample,
    }

    fn view(sample: &TaskSample) -> Result<String, String> {
        let cot = render_chain(sample, &ScenarioTemplates::builtin()).map_err(|e| e.to_string())?;
        let v = View {
            prompt: sample.prompt(),
            gold: sample.gold.letter(),
            cot: cot.rendered,
            svg: window_svg(sample).map_err(|e| e.to_string())?,
            sample,
        };
        serde_json::to_string(&v).map_err(|e| e.to_string())
    }

    fn parse_task(task: &str) -> Result<TaskId, String> {
        task.parse().map_err(|e: finbench_core::Error| e.to_string())
    }

    /// First qualifying sample of `task` in a two-ticker synthetic market
    /// seeded by `seed`.
    pub fn sample(task: &str, seed: u64) -> Result<String, String> {
        let task = parse_task(task)?;
        let cfg = BenchConfig::default();
        let market = synthetic_market(&SynthConfig {
            tickers: 2,
            days: DAYS,
            seed,
            ..SynthConfig::default()
        });
        let legs = if task.is_pair() { 2 } else { 1 };
        let (w, h) = (cfg.window_len, task.horizon(&cfg));
        let span = DAYS - w - h;
        let tickers: Vec<&str> = market.iter().take(legs).map(|s| s.ticker.as_str()).collect();
        for k in 0..span {
            let end = w + (seed as usize % span + k * 37) % span;
            let windows = market[..legs].iter().map(|s| s.closes[end - w..end].to_vec()).collect();
            let forwards = if h == 0 {
                Vec::new()
            } else {
                market[..legs].iter().map(|s| s.closes[end..end + h].to_vec()).collect()
            };
            if let Some(s) = sample_from_prices(task, &tickers, windows, forwards, &cfg).map_err(|e| e.to_string())? {
                return view(&s);
            }
        }
        Err(format!("no {task} sample in this market; try another seed"))
    }

    fn parse_legs(text: &str) -> Result<Vec<Vec<f64>>, String> {
        text.split(';')
            .map(|leg| {
                leg.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a price")))
                    .collect()
            })
            .filter(|leg: &Result<Vec<f64>, String>| leg.as_ref().map_or(true, |l| !l.is_empty()))
            .collect()
    }

    /// Labels user prices. Legs are separated by `;`, prices by commas or
    /// whitespace. `forwards` is ignored for assessment tasks.
    pub fn label(task: &str, windows: &str, forwards: &str) -> Result<String, String> {
        let task = parse_task(task)?;
        let mut cfg = BenchConfig::default();
        let windows = parse_legs(windows)?;
        let forwards = if task.horizon(&cfg) == 0 { Vec::new() } else { parse_legs(forwards)? };
        let n = windows.first().map_or(0, Vec::len);
        if n < 30 || windows.iter().any(|w| w.len() != n) {
            return Err("each window needs the same number of prices, at least 30".into());
        }
        cfg.window_len = n;
        cfg.sr_lookback = cfg.sr_lookback.min(n - 1);
        if let Some(f) = forwards.first() {
            let h = f.len();
            cfg.event_horizon = h;
            cfg.sr_horizon = h;
            cfg.ddr_horizon = h;
            cfg.vf_horizon = h;
            cfg.relperf_fwd = h;
            cfg.pc_horizon = h;
        }
        let names = ["A", "B"];
        let legs = windows.len().min(2);
        match sample_from_prices(task, &names[..legs], windows, forwards, &cfg).map_err(|e| e.to_string())? {
            Some(s) => view(&s),
            None => Err(format!("these prices do not qualify for {task}")),
        }
    }

    #[derive(Serialize)]
    struct ForecastView {
        method: String,
        paths: Vec<Vec<f64>>,
        choice: char,
        gold: char,
        correct: bool,
    }

    /// Forecasts the sample's horizon and answers from the forecast path.
    pub fn forecast(method: &str, sample_json: &str) -> Result<String, String> {
        let method: ForecastMethod = method.parse().map_err(|e: finbench_core::Error| e.to_string())?;
        let sample: TaskSample = serde_json::from_str(sample_json).map_err(|e| e.to_string())?;
        let cfg = BenchConfig {
            window_len: sample.windows[0].len(),
            event_horizon: sample.horizon_days,
            sr_horizon: sample.horizon_days,
            ddr_horizon: sample.horizon_days,
            vf_horizon: sample.horizon_days,
            relperf_fwd: sample.horizon_days,
            pc_horizon: sample.horizon_days,
            ..BenchConfig::default()
        };
        let paths = forecast_sample(method, &sample, &ForecastParams::default()).map_err(|e| e.to_string())?;
        let choice = classify_from_forecast(&sample, &paths, &cfg).map_err(|e| e.to_string())?;
        let v = ForecastView {
            method: method.name().into(),
            paths: paths.into_iter().map(|p| p.predicted_closes).collect(),
            choice: choice.letter(),
            gold: sample.gold.letter(),
            correct: choice == sample.gold,
        };
        serde_json::to_string(&v).map_err(|e| e.to_string())
    }
}

/// JSON `{prompt, gold, cot, svg, sample}` for one synthetic sample.
#[wasm_bindgen]
pub fn sample(task: &str, seed: u32) -> Result<String, JsError> {
    demo::sample(task, u64::from(seed)).map_err(|e| JsError::new(&e))
}

/// Same shape as [`sample`], for user-supplied prices.
#[wasm_bindgen]
pub fn label(task: &str, windows: &str, forwards: &str) -> Result<String, JsError> {
    demo::label(task, windows, forwards).map_err(|e| JsError::new(&e))
}

/// JSON `{method, paths, choice, gold, correct}`.
#[wasm_bindgen]
pub fn forecast(method: &str, sample_json: &str) -> Result<String, JsError> {
    demo::forecast(method, sample_json).map_err(|e| JsError::new(&e))
}
