//! Five-step Scenario-Aware chains for prediction tasks.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::task::{TaskId, TaskSample};

use super::templates::fill;
use super::{CotChain, CotStyle, Phase, Printer, ScenarioTemplates};

/// Short answer name used in the assessment and judgment lines.
fn answer_name(task: TaskId, index: usize) -> &'static str {
    let names: [&str; 2] = match task {
        TaskId::EventResponse => ["Mean-reversion", "Persistence"],
        TaskId::SupportResistance => ["Breakout", "Bounce"],
        TaskId::DrawdownRecovery => ["Recovery", "Deepens"],
        TaskId::VolatilityForecast => ["Vol increases", "Vol decreases"],
        TaskId::RelativePerformance => ["Stock A outperforms", "Stock B outperforms"],
        TaskId::PairConvergence => ["Convergence", "Divergence"],
        _ => ["", ""],
    };
    names[index.min(1)]
}

fn parsed(s: &str) -> f64 {
    s.trim_end_matches('%').trim_start_matches('+').parse().expect("formatted number parses")
}

struct Opening {
    extract: Vec<String>,
    compute: Vec<String>,
    values: BTreeMap<&'static str, String>,
}

fn opening(sample: &TaskSample, p: &mut Printer) -> Result<Opening> {
    let mut values: BTreeMap<&'static str, String> = BTreeMap::new();
    values.insert("horizon", p.int("horizon_days", sample.horizon_days));
    let ticker = sample.tickers[0].clone();
    let (extract, compute) = match sample.task {
        TaskId::EventResponse => {
            let direction = if sample.aux("event_return")? > 0.0 { "positive" } else { "negative" };
            let z = p.fixed("z", sample.aux("z")?, 2);
            let prior = p.fixed("prior_close", sample.aux("prior_close")?, 2);
            let current = p.fixed("current", sample.aux("current")?, 2);
            let ret = p.signed_pct("event_return_pct", (parsed(&current) - parsed(&prior)) / parsed(&prior), 2);
            let pre = sample.aux("pre_trend")?;
            let pre_txt = p.signed_pct("pre_trend_pct", pre, 1);
            let days = p.int("pre_trend_days", sample.aux("pre_trend_days")? as usize);
            let shape = if pre > 0.02 {
                "upward"
            } else if pre < -0.02 {
                "downward"
            } else {
                "flat"
            };
            values.insert("direction", direction.to_string());
            values.insert("z", z.clone());
            values.insert("event_return", ret.clone());
            values.insert("prior_close", prior.clone());
            values.insert("current", current.clone());
            (
                vec![
                    format!("Step 1 -- Event: {direction} shock, z={z}, return={ret}."),
                    format!("Event-day move ({prior}->{current}): {ret}"),
                ],
                vec![format!("Step 2 -- Pre-event trend: {shape} ({pre_txt} over the prior {days} days).")],
            )
        }
        TaskId::SupportResistance => {
            let kind = if sample.aux("level_is_resistance")? > 0.5 { "resistance" } else { "support" };
            let level = p.fixed("level", sample.aux("level")?, 2);
            let current = p.fixed("current", sample.aux("current")?, 2);
            let breakout = p.fixed("breakout_price", sample.aux("breakout_level")?, 2);
            let (lv, cur) = (parsed(&level), parsed(&current));
            let (hi, lo) = if cur >= lv { (&current, &level) } else { (&level, &current) };
            let prox = p.pct("proximity_pct", (parsed(hi) - parsed(lo)) / lv, 1);
            values.insert("level_kind", kind.to_string());
            values.insert("level", level.clone());
            values.insert("current", current.clone());
            values.insert("breakout_price", breakout);
            (
                vec![format!("Step 1 -- Key level: {kind} at {level}.")],
                vec![format!("Step 2 -- Proximity: ({hi} - {lo}) / {level} = {prox}.")],
            )
        }
        TaskId::DrawdownRecovery => {
            let peak = p.fixed("peak", sample.aux("peak")?, 2);
            let current = p.fixed("current", sample.aux("current")?, 2);
            let dd = p.pct("drawdown_pct", (parsed(&peak) - parsed(&current)) / parsed(&peak), 1);
            let ago = p.int("peak_days_ago", sample.aux("peak_days_ago")? as usize);
            values.insert("drawdown", dd.clone());
            values.insert("peak", peak.clone());
            values.insert("current", current.clone());
            values.insert("target", p.fixed("recovery_target", sample.aux("recovery_target")?, 2));
            values.insert("peak_days_ago", ago.clone());
            (
                vec![format!("Step 1 -- Drawdown: {dd} (peak={peak}, current={current}).")],
                vec![format!("Step 2 -- Peak was {ago} days ago.")],
            )
        }
        TaskId::VolatilityForecast => {
            let r = p.fixed("recent_vol_pct", sample.aux("recent_vol")? * 100.0, 2);
            let o = p.fixed("overall_vol_pct", sample.aux("overall_vol")? * 100.0, 2);
            if parsed(&o) == 0.0 {
                return Err(Error::Render("overall volatility prints as zero".into()));
            }
            let ratio_value = parsed(&r) / parsed(&o);
            let ratio = p.fixed("vol_ratio", ratio_value, 2);
            let pattern = if ratio_value > 1.1 {
                "recent volatility is elevated relative to the long-run level"
            } else if ratio_value < 0.9 {
                "recent volatility is subdued relative to the long-run level"
            } else {
                "recent volatility is in line with the long-run level"
            };
            values.insert("recent_vol", format!("{r}%"));
            values.insert("long_vol", format!("{o}%"));
            values.insert("ratio", ratio.clone());
            (
                vec![format!("Step 1 -- Vol: recent={r}%, long={o}%, ratio={ratio}.")],
                vec![format!("Step 2 -- Volatility pattern: {pattern}.")],
            )
        }
        TaskId::RelativePerformance => {
            let tb = sample.tickers.get(1).cloned().unwrap_or_default();
            let h = values["horizon"].clone();
            values.insert("momentum_a", p.signed_pct("momentum_a_pct", sample.aux("momentum_a")?, 1));
            values.insert("momentum_b", p.signed_pct("momentum_b_pct", sample.aux("momentum_b")?, 1));
            values.insert("lookback", p.int("momentum_days", sample.aux("momentum_days")? as usize));
            (
                vec![format!("Step 1 -- Comparing {ticker} vs {tb}.")],
                vec![format!("Step 2 -- Forward window: {h} days.")],
            )
        }
        TaskId::PairConvergence => {
            let tb = sample.tickers.get(1).cloned().unwrap_or_default();
            let a = p.fixed("current_a", sample.aux("current_a")?, 2);
            let b = p.fixed("current_b", sample.aux("current_b")?, 2);
            let (av, bv) = (parsed(&a), parsed(&b));
            let spread = p.fixed("spread", (av - bv) / (av + bv), 3);
            values.insert("spread", spread.clone());
            (
                vec![format!("Step 1 -- Pair: {ticker}, {tb}.")],
                vec![format!("Step 2 -- Current spread: ({a} - {b}) / ({a} + {b}) = {spread}.")],
            )
        }
        other => return Err(Error::Render(format!("{other} is not a prediction task"))),
    };
    if sample.task.is_pair() {
        values.insert("ticker_a", ticker);
        values.insert("ticker_b", sample.tickers.get(1).cloned().unwrap_or_default());
    } else {
        values.insert("ticker", ticker);
    }
    Ok(Opening { extract, compute, values })
}

pub fn render_scenario_cot(sample: &TaskSample, templates: &ScenarioTemplates) -> Result<CotChain> {
    let template = templates.get(sample.task, sample.gold)?;
    let mut p = Printer::default();
    let Opening { extract, compute, values } = opening(sample, &mut p)?;
    let scenarios = vec![
        "Step 3 -- Scenario analysis:".to_string(),
        "  - Base case (most probable -- no major external events):".to_string(),
        format!("    {}", fill(&template.base, &values)?),
        "  - Adverse scenario (external shock reverses expectation):".to_string(),
        format!("    {}", fill(&template.adverse, &values)?),
        "  - Favorable scenario (catalyst strengthens expectation):".to_string(),
        format!("    {}", fill(&template.favorable, &values)?),
    ];
    let name = answer_name(sample.task, sample.gold.index());
    let support = p.int("supporting_scenarios", 2);
    let total = p.int("scenario_count", 3);
    let assessment = vec![
        "Step 4 -- Scenario assessment:".to_string(),
        format!("The base case and favorable scenario ({support} of {total}) support {name}."),
        "The adverse scenario requires a specific external trigger not present in current data.".to_string(),
        "Without new information, the base case is the most probable outcome.".to_string(),
    ];
    let judgment = vec![format!("Step 5 -- Judgment: Base case favors {name} -> ({}).", sample.gold.letter())];
    Ok(CotChain::assemble(
        CotStyle::ScenarioAware,
        vec![
            (Phase::Extract, extract),
            (Phase::Compute, compute),
            (Phase::ScenarioAnalysis, scenarios),
            (Phase::Assessment, assessment),
            (Phase::Judgment, judgment),
        ],
        p.quantities,
        sample.gold,
    ))
}

/// The Step 3 block of a rendered scenario chain.
pub fn scenario_section(rendered: &str) -> Option<&str> {
    let start = rendered.find("Step 3 -- Scenario analysis:")?;
    let end = rendered[start..].find("Step 4 --")? + start;
    Some(&rendered[start..end])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cot::tests_support::sample_with_forward;
    use crate::cot::{check_wrapper, verify_chain};
    use crate::task::Choice;

    fn shock_window(shock: f64) -> Vec<f64> {
        let mut w: Vec<f64> = (0..119).map(|i| if i % 2 == 0 { 100.0 } else { 100.5 }).collect();
        let last = crate::math::round_cents(w[118] * (1.0 + shock));
        w.push(last);
        w
    }

    #[test]
    fn event_persistence_chain() {
        let w = shock_window(0.137);
        let fwd = vec![w[119] * 1.02; 10];
        let s = sample_with_forward(TaskId::EventResponse, vec![w], vec![fwd]);
        assert_eq!(s.gold, Choice::B);
        let c = render_scenario_cot(&s, &ScenarioTemplates::builtin()).unwrap();
        assert!(c.rendered.contains("Step 1 -- Event: positive shock, z="));
        assert!(c.rendered.contains("return=+13.70%."), "{}", c.rendered);
        assert!(c.rendered.contains("Shock reflects genuine new information being priced in."));
        assert!(c.rendered.contains("The base case and favorable scenario (2 of 3) support Persistence."));
        assert!(c.rendered.contains("Step 5 -- Judgment: Base case favors Persistence -> (B)."));
        assert_eq!(check_wrapper(&c.rendered).unwrap(), Choice::B);
        assert_eq!(c.rendered.lines().filter(|l| l.starts_with("  - ")).count(), 3);
        let checks = verify_chain(&c);
        assert!(!checks.is_empty() && checks.iter().all(|x| x.ok), "{checks:?}");
        assert_eq!(c.phases.len(), 5);
    }

    #[test]
    fn recovery_and_spread_chains() {
        let mut w = vec![100.0; 120];
        w[10] = 120.0;
        w[119] = 109.08;
        let mut fwd = vec![109.08; 20];
        fwd[5] = 113.0;
        let s = sample_with_forward(TaskId::DrawdownRecovery, vec![w], vec![fwd]);
        let c = render_scenario_cot(&s, &ScenarioTemplates::builtin()).unwrap();
        assert!(c.rendered.contains("Step 1 -- Drawdown: 9.1% (peak=120.00, current=109.08)."), "{}", c.rendered);
        assert!(c.rendered.contains("value buyers accumulate"));

        let s = sample_with_forward(
            TaskId::PairConvergence,
            vec![vec![132.5; 120], vec![67.5; 120]],
            vec![vec![120.0; 20], vec![80.0; 20]],
        );
        let c = render_scenario_cot(&s, &ScenarioTemplates::builtin()).unwrap();
        assert!(c.rendered.contains("(132.50 - 67.50) / (132.50 + 67.50) = 0.325."), "{}", c.rendered);
        assert!(verify_chain(&c).iter().all(|x| x.ok));
        assert!(scenario_section(&c.rendered).unwrap().contains("Spread narrows"));
    }
}
