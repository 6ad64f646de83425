//! Scenario templates: base / adverse / favorable texts per (task, answer).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{Choice, TaskId};

const BUILTIN: &str = include_str!("../../templates/scenarios.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTemplate {
    pub task: TaskId,
    pub answer: Choice,
    pub base: String,
    pub adverse: String,
    pub favorable: String,
}

#[derive(Deserialize)]
struct TemplateFile {
    template: Vec<ScenarioTemplate>,
}

/// A complete template set covering every prediction task and answer.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTemplates {
    by_key: BTreeMap<(TaskId, Choice), ScenarioTemplate>,
}

/// Placeholders a template for `task` may use.
pub(crate) fn placeholders(task: TaskId) -> &'static [&'static str] {
    match task {
        TaskId::EventResponse => &["ticker", "z", "event_return", "direction", "prior_close", "current", "horizon"],
        TaskId::SupportResistance => &["ticker", "level", "level_kind", "current", "breakout_price", "horizon"],
        TaskId::DrawdownRecovery => &["ticker", "drawdown", "peak", "current", "target", "peak_days_ago", "horizon"],
        TaskId::VolatilityForecast => &["ticker", "recent_vol", "long_vol", "ratio", "horizon"],
        TaskId::RelativePerformance => &["ticker_a", "ticker_b", "momentum_a", "momentum_b", "lookback", "horizon"],
        TaskId::PairConvergence => &["ticker_a", "ticker_b", "spread", "horizon"],
        _ => &[],
    }
}

/// Names inside `{...}` in a template text.
pub(crate) fn placeholder_names(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let Some(len) = rest[open..].find('}') else {
            break;
        };
        out.push(&rest[open + 1..open + len]);
        rest = &rest[open + len + 1..];
    }
    out
}

/// Replaces `{name}` placeholders; unknown names are an error.
pub(crate) fn fill(text: &str, values: &BTreeMap<&str, String>) -> Result<String> {
    let mut out = String::with_capacity(text.len() + 32);
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| Error::Render(format!("unclosed placeholder in `{text}`")))?;
        let name = &rest[open + 1..open + close];
        let v = values
            .get(name)
            .ok_or_else(|| Error::Render(format!("no value for placeholder `{name}`")))?;
        out.push_str(v);
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

impl ScenarioTemplates {
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN).expect("bundled scenario templates are valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: TemplateFile = toml::from_str(text).map_err(|e| Error::Config(format!("scenario templates: {e}")))?;
        let mut by_key = BTreeMap::new();
        for t in file.template {
            if !t.task.is_prediction() {
                return Err(Error::Config(format!("scenario template given for assessment task {}", t.task)));
            }
            if t.answer.index() >= t.task.n_choices() {
                return Err(Error::Config(format!("{} has no answer {}", t.task, t.answer)));
            }
            let allowed = placeholders(t.task);
            for field in [&t.base, &t.adverse, &t.favorable] {
                if let Some(bad) = placeholder_names(field).into_iter().find(|n| !allowed.contains(n)) {
                    return Err(Error::Config(format!("{} template uses unknown placeholder `{bad}`", t.task)));
                }
            }
            let key = (t.task, t.answer);
            if by_key.insert(key, t).is_some() {
                return Err(Error::Config(format!("duplicate scenario template for {} {}", key.0, key.1)));
            }
        }
        for task in TaskId::PREDICTION {
            for i in 0..task.n_choices() {
                let answer = Choice::from_index(i).expect("small index");
                if !by_key.contains_key(&(task, answer)) {
                    return Err(Error::Config(format!("missing scenario template for {task} ({answer})")));
                }
            }
        }
        Ok(Self { by_key })
    }

    pub fn get(&self, task: TaskId, answer: Choice) -> Result<&ScenarioTemplate> {
        self.by_key
            .get(&(task, answer))
            .ok_or_else(|| Error::Config(format!("missing scenario template for {task} ({answer})")))
    }

    pub fn len(&self) -> usize {
        self.by_key.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_key.is_empty()
    }
}
