//! SVG line plots of sample windows.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::task::{TaskId, TaskSample};

const W: f64 = 720.0;
const H: f64 = 360.0;
const PAD_L: f64 = 64.0;
const PAD_R: f64 = 20.0;
const PAD_T: f64 = 36.0;
const PAD_B: f64 = 40.0;
const COLORS: [&str; 2] = ["#1f77b4", "#d62728"];

struct Frame {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Frame {
    fn x(&self, i: usize) -> f64 {
        let span = (self.n.max(2) - 1) as f64;
        PAD_L + (W - PAD_L - PAD_R) * i as f64 / span
    }

    fn y(&self, v: f64) -> f64 {
        let span = if self.hi > self.lo { self.hi - self.lo } else { 1.0 };
        PAD_T + (H - PAD_T - PAD_B) * (1.0 - (v - self.lo) / span)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn polyline(out: &mut String, frame: &Frame, values: &[f64], color: &str) {
    let pts: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(i, v)| format!("{:.1},{:.1}", frame.x(i), frame.y(*v)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
        pts.join(" ")
    );
}

fn hline(out: &mut String, frame: &Frame, v: f64, label: &str, color: &str) {
    let y = frame.y(v);
    let _ = writeln!(
        out,
        r#"<line x1="{PAD_L}" x2="{:.1}" y1="{y:.1}" y2="{y:.1}" stroke="{color}" stroke-dasharray="5,4"/>"#,
        W - PAD_R
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{color}" text-anchor="end">{}</text>"#,
        W - PAD_R - 2.0,
        y - 3.0,
        escape(label)
    );
}

fn marker(out: &mut String, frame: &Frame, i: usize, v: f64, label: &str) {
    let (x, y) = (frame.x(i), frame.y(v));
    let _ = writeln!(out, r##"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="none" stroke="#2ca02c" stroke-width="2"/>"##);
    let _ = writeln!(
        out,
        r##"<text x="{x:.1}" y="{:.1}" font-size="11" fill="#2ca02c" text-anchor="middle">{}</text>"##,
        y - 8.0,
        escape(label)
    );
}

/// Renders the prompt window(s) of a sample as an SVG document.
///
/// Pair samples are indexed to 100 at the first day so both legs share an
/// axis. Drawdown-style samples mark the peak; support/resistance samples
/// draw both key levels.
pub fn window_svg(sample: &TaskSample) -> Result<String> {
    if sample.windows.is_empty() || sample.windows.iter().any(|w| w.is_empty()) {
        return Err(Error::Render("sample has no window prices".into()));
    }
    let pair = sample.windows.len() > 1;
    let series: Vec<Vec<f64>> = if pair {
        sample
            .windows
            .iter()
            .map(|w| w.iter().map(|p| 100.0 * p / w[0]).collect())
            .collect()
    } else {
        sample.windows.clone()
    };
    let mut levels: Vec<(f64, String, &str)> = Vec::new();
    if sample.task == TaskId::SupportResistance {
        for (key, color) in [("support", "#2ca02c"), ("resistance", "#9467bd")] {
            if let Some(v) = sample.aux.get(key) {
                levels.push((*v, format!("{key} {v:.2}"), color));
            }
        }
    }
    let all = series.iter().flatten().copied().chain(levels.iter().map(|l| l.0));
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let margin = ((hi - lo) * 0.05).max(1e-6);
    lo -= margin;
    hi += margin;
    let frame = Frame {
        lo,
        hi,
        n: series.iter().map(Vec::len).max().unwrap_or(0),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let title = format!("{} | {} | {} to {}", sample.task, sample.tickers.join(" vs "), sample.window_start, sample.anchor_date);
    let _ = writeln!(out, r#"<text x="{PAD_L}" y="20" font-size="14">{}</text>"#, escape(&title));
    let _ = writeln!(
        out,
        r##"<rect x="{PAD_L}" y="{PAD_T}" width="{:.1}" height="{:.1}" fill="none" stroke="#999"/>"##,
        W - PAD_L - PAD_R,
        H - PAD_T - PAD_B
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{v:.2}</text>"#,
            PAD_L - 6.0,
            frame.y(v) + 3.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">trading day (1-{})</text>"#,
        (PAD_L + W - PAD_R) / 2.0,
        H - 12.0,
        frame.n
    );
    for (v, label, color) in &levels {
        hline(&mut out, &frame, *v, label, color);
    }
    for (i, s) in series.iter().enumerate() {
        polyline(&mut out, &frame, s, COLORS[i % COLORS.len()]);
    }
    if pair {
        for (i, t) in sample.tickers.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{}">{} (indexed to 100)</text>"#,
                PAD_L + 8.0,
                PAD_T + 14.0 * (i + 1) as f64,
                COLORS[i % COLORS.len()],
                escape(t)
            );
        }
    }
    if matches!(sample.task, TaskId::Drawdown | TaskId::DrawdownRecovery) {
        let w = &series[0];
        let (peak_i, peak) = w
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        marker(&mut out, &frame, peak_i, peak, &format!("peak {peak:.2}"));
    }
    if sample.task == TaskId::EventResponse {
        let w = &series[0];
        marker(&mut out, &frame, w.len() - 1, w[w.len() - 1], "event");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Writes [`window_svg`] to `path`.
pub fn plot_window(sample: &TaskSample, path: &Path) -> Result<()> {
    let svg = window_svg(sample)?;
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
