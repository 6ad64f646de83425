//! Question text for each task.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{BenchConfig, TaskId};

pub(crate) fn price_list(prices: &[f64]) -> String {
    let mut out = String::with_capacity(prices.len() * 8);
    for (i, p) in prices.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{p:.2}");
    }
    out
}

fn single_header(ticker: &str, window: &[f64]) -> String {
    format!(
        "You are analyzing the stock {ticker}. Below are the daily closing prices ({} days): {}.",
        window.len(),
        price_list(window)
    )
}

fn pair_header(opening: &str, tickers: &[String], windows: &[Vec<f64>]) -> String {
    format!(
        "{opening} Stock A ({}) and Stock B ({}) daily closing prices ({} days each):\nStock A: {}.\nStock B: {}.",
        tickers[0],
        tickers[1],
        windows[0].len(),
        price_list(&windows[0]),
        price_list(&windows[1])
    )
}

pub(crate) fn build_question(
    task: TaskId,
    tickers: &[String],
    windows: &[Vec<f64>],
    aux: &BTreeMap<String, f64>,
    cfg: &BenchConfig,
) -> String {
    let get = |k: &str| aux.get(k).copied().unwrap_or(0.0);
    let h = task.horizon(cfg);
    let n = windows[0].len();
    match task {
        TaskId::Drawdown => format!(
            "You are analyzing the stock {}. Below are the daily closing prices for the most recent {n} trading days: {}. \
             Based on these prices, assess the current drawdown phase.",
            tickers[0],
            price_list(&windows[0])
        ),
        TaskId::VolatilityRegime => format!(
            "{} Compute the ratio of recent (last {} days) to overall ({n}-day) volatility.",
            single_header(&tickers[0], &windows[0]),
            cfg.recent_vol_days
        ),
        TaskId::TrendDirection => format!("{} Classify the overall trend direction.", single_header(&tickers[0], &windows[0])),
        TaskId::Correlation => format!(
            "{}\nDetermine the correlation between their daily returns.",
            pair_header("You are analyzing the relationship between two stocks.", tickers, windows)
        ),
        TaskId::EventResponse => {
            let dir = if get("event_return") > 0.0 { "positive" } else { "negative" };
            format!(
                "{} The stock just experienced a significant {dir} shock. Predict the outcome over the next {h} days.",
                single_header(&tickers[0], &windows[0])
            )
        }
        TaskId::SupportResistance => {
            let kind = if get("level_is_resistance") > 0.5 { "resistance" } else { "support" };
            format!(
                "{} The stock is currently near a key {kind} level. Predict the behavior over the next {h} days.",
                single_header(&tickers[0], &windows[0])
            )
        }
        TaskId::DrawdownRecovery => format!(
            "{} The stock has experienced a drawdown of {} from its recent peak. Predict the behavior over the next {h} days.",
            single_header(&tickers[0], &windows[0]),
            crate::cot::format_pct(get("drawdown_frac"), 1)
        ),
        TaskId::VolatilityForecast => format!(
            "{} The current volatility ratio (recent {}-day vs overall) is {:.2}. Predict how volatility will change over the next {h} days.",
            single_header(&tickers[0], &windows[0]),
            cfg.recent_vol_days,
            get("vol_ratio")
        ),
        TaskId::RelativePerformance => format!(
            "{}\nPredict which stock will have a higher return over the next {h} days.",
            pair_header("You are comparing two stocks.", tickers, windows)
        ),
        TaskId::PairConvergence => format!(
            "{}\nThe price spread (normalized difference) is {:.3}. Predict how the spread will change over the next {h} days.",
            pair_header("You are comparing two stocks.", tickers, windows),
            get("spread")
        ),
    }
}

/// Question plus lettered options and the required answer format.
pub fn render_prompt(question: &str, choices: &[String]) -> String {
    let mut out = String::with_capacity(question.len() + 256);
    out.push_str(question);
    out.push_str("\n\nOptions:\n");
    for (i, c) in choices.iter().enumerate() {
        let _ = writeln!(out, "({}) {c}", (b'A' + i as u8) as char);
    }
    out.push_str("\nThink step by step inside <think></think>, then give the option letter inside <answer></answer>.");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prices_print_two_decimals() {
        assert_eq!(price_list(&[54.32, 54.5, 100.0]), "54.32, 54.50, 100.00");
    }

    #[test]
    fn prompt_lists_options_in_order() {
        let p = render_prompt("Q?", &["Up".into(), "Down".into()]);
        assert!(p.starts_with("Q?\n\nOptions:\n(A) Up\n(B) Down\n"));
        assert!(p.contains("<answer>"));
    }

    #[test]
    fn pair_question_names_both_legs() {
        let cfg = BenchConfig::default();
        let q = build_question(
            TaskId::RelativePerformance,
            &["AAA".into(), "BBB".into()],
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
            &BTreeMap::new(),
            &cfg,
        );
        assert!(q.contains("Stock A (AAA)") && q.contains("Stock B: 3.00, 4.00."));
        assert!(q.contains("over the next 20 days."));
    }
}
