//! Extract / Compute / Classify chains for assessment tasks.
//!
//! Every printed result is recomputed from the operands exactly as printed,
//! and printed precision grows until the printed value classifies like the
//! gold label.

use crate::error::{Error, Result};
use crate::task::label::{classify_drawdown, classify_trend, classify_vol_ratio};
use crate::task::{Choice, TaskId, TaskSample};

use super::{format_fixed, CotChain, CotStyle, Phase, Printer};

const MAX_DECIMALS: usize = 10;

fn parsed(s: &str) -> f64 {
    s.parse().expect("formatted number parses")
}

/// Smallest precision (from `start`) at which `print(d)` classifies as `gold`.
fn adaptive<F: Fn(usize) -> (String, Choice)>(start: usize, gold: Choice, print: F) -> usize {
    (start..=MAX_DECIMALS).find(|d| print(*d).1 == gold).unwrap_or(MAX_DECIMALS)
}

pub fn render_compute_cot(sample: &TaskSample) -> Result<CotChain> {
    match sample.task {
        TaskId::Drawdown => drawdown_chain(sample),
        TaskId::VolatilityRegime => volatility_chain(sample),
        TaskId::TrendDirection => trend_chain(sample),
        TaskId::Correlation => correlation_chain(sample),
        other => Err(Error::Render(format!("{other} is not an assessment task"))),
    }
}

fn finish(sample: &TaskSample, p: Printer, extract: Vec<String>, compute: Vec<String>, classify: Vec<String>, shown: Choice) -> Result<CotChain> {
    if shown != sample.gold {
        return Err(Error::Render(format!(
            "{} chain classifies as {shown} but gold is {}",
            sample.task, sample.gold
        )));
    }
    Ok(CotChain::assemble(
        CotStyle::ComputeInCot,
        vec![(Phase::Extract, extract), (Phase::Compute, compute), (Phase::Classify, classify)],
        p.quantities,
        sample.gold,
    ))
}

fn drawdown_chain(sample: &TaskSample) -> Result<CotChain> {
    let mut p = Printer::default();
    let peak = p.fixed("peak", sample.aux("peak")?, 2);
    let current = p.fixed("current", sample.aux("current")?, 2);
    let peak_day = p.int("peak_day", sample.aux("peak_day")? as usize);
    let n = p.int("window_days", sample.window(0).len());
    let (pk, cur) = (parsed(&peak), parsed(&current));
    let value = (pk - cur) / pk * 100.0;
    let d = adaptive(1, sample.gold, |d| {
        let s = format_fixed(value, d);
        let c = classify_drawdown(parsed(&s) / 100.0);
        (s, c)
    });
    let dd = p.fixed("drawdown_pct", value, d);
    let shown = classify_drawdown(parsed(&dd) / 100.0);
    let extract = vec![
        "Step 1 -- Find the peak price:".to_string(),
        format!("Scanning the {n}-day series, the highest price is {peak} (around day {peak_day})."),
        "Step 2 -- Current price:".to_string(),
        format!("The last price in the series is {current}."),
    ];
    let compute = vec![
        "Step 3 -- Calculate drawdown:".to_string(),
        format!("Drawdown = (Peak - Current) / Peak = ({peak} - {current}) / {peak} = {dd}%"),
    ];
    let lo = p.int("threshold_pullback", 3);
    let mid = p.int("threshold_correction", 10);
    let hi = p.int("threshold_severe", 20);
    let verdict = match shown.index() {
        0 => format!("{dd}% is below {lo}%, which corresponds to (A) At/Near Peak."),
        1 => format!("{dd}% is between {lo}% and {mid}%, which corresponds to (B) Pullback."),
        2 => format!("{dd}% is between {mid}% and {hi}%, which corresponds to (C) Correction."),
        _ => format!("{dd}% is at or above {hi}%, which corresponds to (D) Severe Decline."),
    };
    finish(sample, p, extract, compute, vec!["Step 4 -- Classify:".into(), verdict], shown)
}

fn volatility_chain(sample: &TaskSample) -> Result<CotChain> {
    let mut p = Printer::default();
    let w = sample.window(0);
    let overall = sample.aux("overall_vol")?;
    let recent = sample.aux("recent_vol")?;
    let recent_days = sample.aux("recent_days")? as usize;
    let printed = |d: usize| {
        let r = parsed(&format_fixed(recent * 100.0, d));
        let o = parsed(&format_fixed(overall * 100.0, d));
        let ratio = parsed(&format_fixed(r / o, d));
        (classify_vol_ratio(r / o), classify_vol_ratio(ratio))
    };
    let d = (2..=MAX_DECIMALS)
        .find(|d| printed(*d) == (sample.gold, sample.gold))
        .unwrap_or(MAX_DECIMALS);
    let r = p.fixed("recent_vol_pct", recent * 100.0, d);
    let o = p.fixed("overall_vol_pct", overall * 100.0, d);
    if parsed(&o) == 0.0 {
        return Err(Error::Render("overall volatility prints as zero".into()));
    }
    let ratio = p.fixed("vol_ratio", parsed(&r) / parsed(&o), d);
    let shown = classify_vol_ratio(parsed(&ratio));

    let mut examples = Vec::new();
    for (i, pair) in w.windows(2).take(3).enumerate() {
        let a = p.fixed(&format!("example_{}_from", i + 1), pair[0], 2);
        let b = p.fixed(&format!("example_{}_to", i + 1), pair[1], 2);
        let ret = p.signed_pct(&format!("example_{}_return", i + 1), (parsed(&b) - parsed(&a)) / parsed(&a), 2);
        examples.push(format!("({a}->{b}): {ret}"));
    }
    let days = p.int("recent_days", recent_days);
    let extract = vec![
        "Step 1 -- Compute daily returns from prices:".to_string(),
        format!("e.g., {}", examples.join(", ")),
        "...".to_string(),
    ];
    let compute = vec![
        format!("Step 2 -- Overall volatility (std of all returns): {o}%"),
        format!("Step 3 -- Recent {days}-day volatility: {r}%"),
        format!("Step 4 -- Ratio = {r} / {o} = {ratio}"),
    ];
    let classify = match shown.index() {
        0 => vec![
            "Recent volatility is well below the long-term average -- calm conditions.".to_string(),
            "-> (A) low volatility.".to_string(),
        ],
        1 => vec![
            "Recent volatility is close to the long-term average -- normal conditions.".to_string(),
            "-> (B) normal volatility.".to_string(),
        ],
        _ => vec![
            "Recent volatility is well above the long-term average -- turbulent conditions.".to_string(),
            "-> (C) high volatility.".to_string(),
        ],
    };
    finish(sample, p, extract, compute, classify, shown)
}

fn trend_chain(sample: &TaskSample) -> Result<CotChain> {
    let mut p = Printer::default();
    let start = p.fixed("start", sample.aux("start")?, 2);
    let end = p.fixed("end", sample.aux("end")?, 2);
    let first_day = p.int("start_day", 1);
    let last_day = p.int("end_day", sample.window(0).len());
    let value = (parsed(&end) - parsed(&start)) / parsed(&start) * 100.0;
    let d = adaptive(1, sample.gold, |d| {
        let s = format_fixed(value, d);
        let c = classify_trend(parsed(&s) / 100.0);
        (s, c)
    });
    let ret = p.fixed("return_pct", value, d);
    let shown = classify_trend(parsed(&ret) / 100.0);
    let five = p.int("threshold_mild", 5);
    let twenty = p.int("threshold_strong", 20);
    let class = match shown.index() {
        0 => format!("(A) Strong Uptrend (>{twenty}%)"),
        1 => format!("(B) Mild Uptrend ({five}-{twenty}%)"),
        2 => format!("(C) Sideways (-{five}% to +{five}%)"),
        3 => format!("(D) Mild Downtrend ({five}-{twenty}% decline)"),
        _ => format!("(E) Strong Downtrend (<-{twenty}%)"),
    };
    let extract = vec![
        "Step 1 -- Read start and end prices:".to_string(),
        format!("Start (day {first_day}): {start}"),
        format!("End (day {last_day}): {end}"),
    ];
    let compute = vec![
        "Step 2 -- Compute cumulative return:".to_string(),
        format!("Return = ({end} - {start}) / {start} = {ret}%"),
    ];
    let classify = vec!["Step 3 -- Classify:".to_string(), format!("{ret}% -> {class}.")];
    finish(sample, p, extract, compute, classify, shown)
}

const PERIOD_DAYS: usize = 10;

fn correlation_chain(sample: &TaskSample) -> Result<CotChain> {
    if sample.windows.len() != 2 {
        return Err(Error::Render("correlation sample needs two windows".into()));
    }
    let mut p = Printer::default();
    let (a, b) = (sample.window(0), sample.window(1));
    let n = a.len().min(b.len());
    let periods = n.div_ceil(PERIOD_DAYS);
    let count = p.int("periods", periods);
    let span = p.int("period_days", PERIOD_DAYS);
    let mut extract = vec![format!("Step 1 -- Compare price changes in {count} periods (~{span} days each):")];
    for k in 0..periods {
        let first = k * PERIOD_DAYS;
        let last = ((k + 1) * PERIOD_DAYS).min(n) - 1;
        // Each period runs from the previous period's last close.
        let base = first.saturating_sub(1);
        let s = p.int(&format!("period_{}_start", k + 1), first + 1);
        let e = p.int(&format!("period_{}_end", k + 1), last + 1);
        let ca = p.signed_pct(&format!("period_{}_a", k + 1), a[last] / a[base] - 1.0, 1);
        let cb = p.signed_pct(&format!("period_{}_b", k + 1), b[last] / b[base] - 1.0, 1);
        extract.push(format!("Days {s}-{e}: A={ca}, B={cb}"));
    }
    let (pattern, verdict) = match sample.gold.index() {
        0 => (
            "When A rises, B tends to rise as well, and when A falls, B tends to fall. The two stocks move in the same direction across most periods.",
            "Step 3 -- positive correlation -> (A).",
        ),
        1 => (
            "When A rises, B tends to fall, and when A falls, B tends to rise. The two stocks move in opposite directions across most periods.",
            "Step 3 -- negative correlation -> (B).",
        ),
        _ => (
            "The direction of A's moves says little about B's. The two stocks move together in some periods and apart in others.",
            "Step 3 -- no significant correlation -> (C).",
        ),
    };
    let compute = vec!["Step 2 -- Pattern:".to_string(), pattern.to_string()];
    finish(sample, p, extract, compute, vec![verdict.to_string()], sample.gold)
}
