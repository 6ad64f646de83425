//! Run configuration: one TOML file that fully determines a build.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::sha256_hex;
use crate::error::{Error, Result};
use crate::eval::HttpConfig;
use crate::forecast::ForecastParams;
use crate::market::ColumnMapping;
use crate::synth::SynthConfig;
use crate::task::BenchConfig;

/// Where prices come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Long-format CSV of daily closes.
    pub prices: Option<PathBuf>,
    /// One ticker per line, largest market capitalisation first.
    pub universe: Option<PathBuf>,
    pub columns: ColumnMapping,
    pub in_domain_count: usize,
    pub ood_count: usize,
    /// Ignore `prices`/`universe` and build a synthetic market instead.
    pub synthetic: bool,
    pub synth: SynthConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            prices: None,
            universe: None,
            columns: ColumnMapping::default(),
            in_domain_count: 200,
            ood_count: 50,
            synthetic: false,
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    /// Last in-sample date; test periods start the next day.
    pub boundary: NaiveDate,
    /// Clip the data range; defaults to the full span of the price table.
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            boundary: NaiveDate::from_ymd_opt(2022, 12, 31).expect("valid date"),
            start: None,
            end: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CotConfig {
    /// Attach reasoning chains to training records.
    pub enabled: bool,
    /// Scenario template file; the built-in table when absent.
    pub templates: Option<PathBuf>,
}

impl Default for CotConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            templates: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// Generate (task, split) jobs on a thread pool. Output is identical either way.
    pub parallel: bool,
    pub bench: BenchConfig,
    pub data: DataConfig,
    pub splits: SplitConfig,
    pub cot: CotConfig,
    pub forecast: ForecastParams,
    pub http: HttpConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            parallel: true,
            bench: BenchConfig::default(),
            data: DataConfig::default(),
            splits: SplitConfig::default(),
            cot: CotConfig::default(),
            forecast: ForecastParams::default(),
            http: HttpConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        self.bench.validate()?;
        self.forecast.validate()?;
        if !self.data.synthetic && self.data.prices.is_none() {
            return Err(Error::Config("set data.prices or enable data.synthetic".into()));
        }
        if self.data.synthetic && self.data.synth.tickers < self.data.in_domain_count + self.data.ood_count {
            return Err(Error::Config(format!(
                "synthetic market has {} tickers but the universe needs {}",
                self.data.synth.tickers,
                self.data.in_domain_count + self.data.ood_count
            )));
        }
        if let (Some(s), Some(e)) = (self.splits.start, self.splits.end) {
            if s >= e {
                return Err(Error::Config("splits.start must precede splits.end".into()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding. The output directory and the
    /// threading switch do not affect a build and are excluded.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        canon.parallel = true;
        let json = serde_json::to_vec(&canon).expect("config serialises to JSON");
        sha256_hex(&json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::TaskId;

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.bench.task_seeds.insert(TaskId::EventResponse, 99);
        cfg.data.synthetic = true;
        cfg.data.prices = Some("prices.csv".into());
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn partial_file_uses_defaults() {
        let cfg = RunConfig::from_toml_str("[bench]\ncap_train = 10\n[data]\nsynthetic = true\n").unwrap();
        assert_eq!(cfg.bench.cap_train, 10);
        assert_eq!(cfg.bench.window_len, 120);
        assert_eq!(cfg.splits.boundary, NaiveDate::from_ymd_opt(2022, 12, 31).unwrap());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("[bench]\nwindow = 3\n").is_err());
    }

    #[test]
    fn hash_tracks_build_inputs_only() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.bench.base_seed += 1;
        assert_ne!(a.hash(), b.hash());
    }
}
