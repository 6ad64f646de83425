//! Recomputation of the arithmetic printed in a chain.
//!
//! Two shapes are checked: `<expr> = <number>[%]`, where `<expr>` uses numbers,
//! parentheses and `+ - * /` with at least one operator, and the return
//! shorthand `(a->b): <number>%`. Operands are taken as exact; the printed
//! result may differ from the recomputed value by half a unit in its last
//! printed digit.

use serde::{Deserialize, Serialize};

use super::CotChain;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticCheck {
    pub expression: String,
    pub printed: String,
    pub recomputed: f64,
    pub ok: bool,
    /// Byte range of the printed result within the checked text.
    #[serde(skip)]
    pub printed_span: (usize, usize),
}

pub fn verify_chain(chain: &CotChain) -> Vec<ArithmeticCheck> {
    verify_arithmetic(&chain.rendered)
}

pub fn verify_arithmetic(text: &str) -> Vec<ArithmeticCheck> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    for (eq, _) in text.match_indices('=') {
        let Some(result) = parse_result(text, eq + 1) else {
            continue;
        };
        let mut start = eq;
        while start > 0 && b"0123456789.()+-*/ ".contains(&bytes[start - 1]) {
            start -= 1;
        }
        let expr = text[start..eq].trim();
        let Some(value) = evaluate(expr) else {
            continue;
        };
        out.push(check(expr.to_string(), value, text, result));
    }
    for (arrow, _) in text.match_indices("->") {
        let Some(open) = text[..arrow].rfind('(') else {
            continue;
        };
        let Ok(from) = text[open + 1..arrow].trim().parse::<f64>() else {
            continue;
        };
        let rest = &text[arrow + 2..];
        let Some(close) = rest.find(')') else {
            continue;
        };
        let Ok(to) = rest[..close].trim().parse::<f64>() else {
            continue;
        };
        if !rest[close + 1..].starts_with(':') {
            continue;
        }
        let Some(result) = parse_result(text, arrow + 2 + close + 2) else {
            continue;
        };
        if !result.percent || from == 0.0 {
            continue;
        }
        let expr = format!("({to} - {from}) / {from}");
        out.push(check(expr, (to - from) / from, text, result));
    }
    out.sort_by_key(|c| c.printed_span.0);
    out
}

struct PrintedResult {
    start: usize,
    end: usize,
    value: f64,
    decimals: usize,
    percent: bool,
}

/// A signed decimal number (optionally followed by `%`) after leading spaces.
fn parse_result(text: &str, from: usize) -> Option<PrintedResult> {
    let bytes = text.as_bytes();
    let mut i = from;
    while i < bytes.len() && bytes[i] == b' ' {
        i += 1;
    }
    let start = i;
    if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
        i += 1;
    }
    let digits_from = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i == digits_from {
        return None;
    }
    let mut decimals = 0;
    if i + 1 < bytes.len() && bytes[i] == b'.' && bytes[i + 1].is_ascii_digit() {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
            decimals += 1;
        }
    }
    let value: f64 = text[start..i].trim_start_matches('+').parse().ok()?;
    let percent = bytes.get(i) == Some(&b'%');
    let end = if percent { i + 1 } else { i };
    Some(PrintedResult {
        start,
        end,
        value,
        decimals,
        percent,
    })
}

fn check(expression: String, raw: f64, text: &str, r: PrintedResult) -> ArithmeticCheck {
    let recomputed = if r.percent { raw * 100.0 } else { raw };
    let half_ulp = 0.5 * 10f64.powi(-(r.decimals as i32));
    let slack = 1e-9 * r.value.abs().max(1.0);
    ArithmeticCheck {
        expression,
        printed: text[r.start..r.end].to_string(),
        recomputed,
        ok: (recomputed - r.value).abs() <= half_ulp + slack,
        printed_span: (r.start, r.end),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok {
    Num(f64),
    Op(u8),
    Open,
    Close,
}

fn tokenize(expr: &str) -> Option<Vec<Tok>> {
    let b = expr.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        match b[i] {
            b' ' => i += 1,
            b'(' => {
                out.push(Tok::Open);
                i += 1;
            }
            b')' => {
                out.push(Tok::Close);
                i += 1;
            }
            c @ (b'+' | b'-' | b'*' | b'/') => {
                out.push(Tok::Op(c));
                i += 1;
            }
            c if c.is_ascii_digit() || c == b'.' => {
                let s = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                out.push(Tok::Num(expr[s..i].parse().ok()?));
            }
            _ => return None,
        }
    }
    Some(out)
}

/// Evaluates an arithmetic expression with at least one binary operator.
fn evaluate(expr: &str) -> Option<f64> {
    let toks = tokenize(expr)?;
    let numbers = toks.iter().filter(|t| matches!(t, Tok::Num(_))).count();
    if numbers < 2 {
        return None;
    }
    let mut pos = 0;
    let v = parse_sum(&toks, &mut pos)?;
    (pos == toks.len() && v.is_finite()).then_some(v)
}

fn parse_sum(t: &[Tok], pos: &mut usize) -> Option<f64> {
    let mut v = parse_product(t, pos)?;
    while let Some(Tok::Op(op @ (b'+' | b'-'))) = t.get(*pos) {
        *pos += 1;
        let rhs = parse_product(t, pos)?;
        v = if *op == b'+' { v + rhs } else { v - rhs };
    }
    Some(v)
}

fn parse_product(t: &[Tok], pos: &mut usize) -> Option<f64> {
    let mut v = parse_atom(t, pos)?;
    while let Some(Tok::Op(op @ (b'*' | b'/'))) = t.get(*pos) {
        *pos += 1;
        let rhs = parse_atom(t, pos)?;
        v = if *op == b'*' { v * rhs } else { v / rhs };
    }
    Some(v)
}

fn parse_atom(t: &[Tok], pos: &mut usize) -> Option<f64> {
    match t.get(*pos)? {
        Tok::Num(n) => {
            *pos += 1;
            Some(*n)
        }
        Tok::Op(b'-') => {
            *pos += 1;
            parse_atom(t, pos).map(|v| -v)
        }
        Tok::Open => {
            *pos += 1;
            let v = parse_sum(t, pos)?;
            if t.get(*pos) != Some(&Tok::Close) {
                return None;
            }
            *pos += 1;
            Some(v)
        }
        _ => None,
    }
}

/// Shifts the first checkable printed result by one unit of its last digit,
/// away from the recomputed value. `None` if the text has no checkable result.
pub fn inject_fault(text: &str) -> Option<String> {
    let first = verify_arithmetic(text).into_iter().next()?;
    let (s, e) = first.printed_span;
    let printed = &text[s..e];
    let percent = printed.ends_with('%');
    let number = printed.trim_end_matches('%');
    let r = parse_result(number, 0)?;
    let unit = 10f64.powi(-(r.decimals as i32));
    let shifted = if first.recomputed > r.value { r.value - unit } else { r.value + unit };
    let mut replacement = format!("{shifted:.*}", r.decimals);
    if number.starts_with('+') && shifted >= 0.0 {
        replacement.insert(0, '+');
    }
    if percent {
        replacement.push('%');
    }
    Some(format!("{}{}{}", &text[..s], replacement, &text[e..]))
}
