//! Price ingestion, the ranked stock universe, and train/test partitioning.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One ticker's daily closing prices, ordered by date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub ticker: String,
    pub dates: Vec<NaiveDate>,
    pub closes: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series, checking ordering, positivity and length agreement.
    pub fn new(ticker: impl Into<String>, dates: Vec<NaiveDate>, closes: Vec<f64>) -> Result<Self> {
        let ticker = ticker.into();
        if dates.is_empty() {
            return Err(Error::Config(format!("series {ticker} is empty")));
        }
        if dates.len() != closes.len() {
            return Err(Error::Config(format!(
                "series {ticker}: {} dates but {} closes",
                dates.len(),
                closes.len()
            )));
        }
        if let Some(w) = dates.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "series {ticker}: dates not strictly increasing at {}",
                dates[w + 1]
            )));
        }
        if let Some(bad) = closes.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::Config(format!("series {ticker}: invalid close {bad}")));
        }
        Ok(Self {
            ticker,
            dates,
            closes,
        })
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    /// Index of `date` in this series, if it is a trading date here.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// The sub-series whose dates fall in `[start, end]`.
    pub fn between(&self, start: NaiveDate, end: NaiveDate) -> Option<PriceSeries> {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        (lo < hi).then(|| PriceSeries {
            ticker: self.ticker.clone(),
            dates: self.dates[lo..hi].to_vec(),
            closes: self.closes[lo..hi].to_vec(),
        })
    }
}

/// Column names used to read a price table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub date: String,
    pub ticker: String,
    pub close: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            date: "date".into(),
            ticker: "ticker".into(),
            close: "close".into(),
        }
    }
}

/// Reads a long-format CSV (`date,ticker,close`) into one series per ticker.
///
/// Row numbers in errors are 1-based file line numbers (the header is line 1).
/// Series are returned sorted by ticker.
pub fn load_price_table(path: &Path, schema: &ColumnMapping) -> Result<Vec<PriceSeries>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_price_table(file, path, schema)
}

/// Writes series as a long-format CSV with the default column names.
pub fn write_price_table(path: &Path, series: &[PriceSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let cols = ColumnMapping::default();
    let mut write = || -> csv::Result<()> {
        w.write_record([&cols.date, &cols.ticker, &cols.close])?;
        for s in series {
            for (d, c) in s.dates.iter().zip(&s.closes) {
                w.write_record([d.to_string(), s.ticker.clone(), format!("{c:.2}")])?;
            }
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| Error::io(path, e.into()))
}

pub(crate) fn read_price_table<R: std::io::Read>(
    reader: R,
    path: &Path,
    schema: &ColumnMapping,
) -> Result<Vec<PriceSeries>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema {
                path: path.to_path_buf(),
                message: format!("missing column `{name}`"),
            })
    };
    let (date_col, ticker_col, close_col) =
        (column(&schema.date)?, column(&schema.ticker)?, column(&schema.close)?);

    let mut rows: BTreeMap<String, Vec<(NaiveDate, f64, usize)>> = BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::Row {
            row: line,
            message: e.to_string(),
        })?;
        let field = |col: usize| record.get(col).unwrap_or("");
        let date = NaiveDate::parse_from_str(field(date_col), "%Y-%m-%d").map_err(|e| Error::Row {
            row: line,
            message: format!("bad date `{}`: {e}", field(date_col)),
        })?;
        let ticker = field(ticker_col);
        if ticker.is_empty() {
            return Err(Error::Row {
                row: line,
                message: "empty ticker".into(),
            });
        }
        let close: f64 = field(close_col).parse().map_err(|_| Error::Row {
            row: line,
            message: format!("bad close `{}`", field(close_col)),
        })?;
        if !(close.is_finite() && close > 0.0) {
            return Err(Error::Row {
                row: line,
                message: format!("close must be positive and finite, got {close}"),
            });
        }
        rows.entry(ticker.to_string()).or_default().push((date, close, line));
    }
    if rows.is_empty() {
        return Err(Error::EmptyData(path.to_path_buf()));
    }

    let mut out = Vec::with_capacity(rows.len());
    for (ticker, mut obs) in rows {
        obs.sort_by_key(|(d, _, _)| *d);
        if let Some(w) = obs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Row {
                row: w[1].2,
                message: format!("duplicate date {} for {ticker}", w[1].0),
            });
        }
        let (dates, closes) = obs.into_iter().map(|(d, c, _)| (d, c)).unzip();
        out.push(PriceSeries::new(ticker, dates, closes)?);
    }
    Ok(out)
}

/// Ranked tickers, largest market capitalisation first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Universe {
    pub ranked_tickers: Vec<String>,
    pub in_domain_count: usize,
    pub ood_count: usize,
}

impl Universe {
    pub fn new(ranked_tickers: Vec<String>, in_domain_count: usize, ood_count: usize) -> Result<Self> {
        let mut seen = HashSet::new();
        if let Some(dup) = ranked_tickers.iter().find(|t| !seen.insert(t.as_str())) {
            return Err(Error::Config(format!("duplicate ticker `{dup}` in universe")));
        }
        if in_domain_count == 0 || ood_count == 0 {
            return Err(Error::Config("in-domain and OOD counts must be positive".into()));
        }
        if in_domain_count + ood_count > ranked_tickers.len() {
            return Err(Error::Config(format!(
                "universe has {} tickers but {} in-domain + {} OOD were requested",
                ranked_tickers.len(),
                in_domain_count,
                ood_count
            )));
        }
        Ok(Self {
            ranked_tickers,
            in_domain_count,
            ood_count,
        })
    }

    pub fn in_domain(&self) -> &[String] {
        &self.ranked_tickers[..self.in_domain_count]
    }

    pub fn ood(&self) -> &[String] {
        &self.ranked_tickers[self.in_domain_count..self.in_domain_count + self.ood_count]
    }
}

/// Reads a universe file: one ticker per line in rank order; blank lines and
/// `#` comments are ignored.
pub fn load_universe(path: &Path, in_domain_count: usize, ood_count: usize) -> Result<Universe> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let tickers = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect();
    Universe::new(tickers, in_domain_count, ood_count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SplitName {
    Train,
    TestA,
    TestB,
    TestC,
}

impl SplitName {
    pub const ALL: [SplitName; 4] = [SplitName::Train, SplitName::TestA, SplitName::TestB, SplitName::TestC];

    pub fn is_test(self) -> bool {
        self != SplitName::Train
    }

    /// File-name friendly identifier (`train`, `test_a`, ...).
    pub fn slug(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::TestA => "test_a",
            SplitName::TestB => "test_b",
            SplitName::TestC => "test_c",
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitName::Train => "Train",
            SplitName::TestA => "Test A",
            SplitName::TestB => "Test B",
            SplitName::TestC => "Test C",
        })
    }
}

impl std::str::FromStr for SplitName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "train" => Ok(SplitName::Train),
            "test_a" | "testa" | "a" => Ok(SplitName::TestA),
            "test_b" | "testb" | "b" => Ok(SplitName::TestB),
            "test_c" | "testc" | "c" => Ok(SplitName::TestC),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TickerSet {
    InDomain,
    Ood,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub name: SplitName,
    pub ticker_set: TickerSet,
    pub tickers: Vec<String>,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl SplitSpec {
    pub fn contains_date(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

/// Partitions the universe along tickers (in-domain / OOD) and time
/// (`<= boundary` / `> boundary`) into Train, Test A, Test B and Test C.
pub fn assign_splits(
    universe: &Universe,
    boundary: NaiveDate,
    data_start: NaiveDate,
    data_end: NaiveDate,
) -> Result<Vec<SplitSpec>> {
    if boundary < data_start || boundary >= data_end {
        return Err(Error::Config(format!(
            "split boundary {boundary} must lie inside the data range [{data_start}, {data_end})"
        )));
    }
    let after = boundary
        .succ_opt()
        .ok_or_else(|| Error::Config("boundary date overflow".into()))?;
    let id = universe.in_domain().to_vec();
    let ood = universe.ood().to_vec();
    let spec = |name, ticker_set, tickers: &Vec<String>, start, end| SplitSpec {
        name,
        ticker_set,
        tickers: tickers.clone(),
        start,
        end,
    };
    Ok(vec![
        spec(SplitName::Train, TickerSet::InDomain, &id, data_start, boundary),
        spec(SplitName::TestA, TickerSet::InDomain, &id, after, data_end),
        spec(SplitName::TestB, TickerSet::Ood, &ood, data_start, boundary),
        spec(SplitName::TestC, TickerSet::Ood, &ood, after, data_end),
    ])
}

/// The `window_len` prices ending at `anchor_index` (inclusive).
pub fn slice_window(series: &PriceSeries, anchor_index: usize, window_len: usize) -> Result<PriceSeries> {
    if window_len == 0 || anchor_index + 1 < window_len || anchor_index >= series.len() {
        return Err(Error::Window {
            anchor: anchor_index,
            len: window_len,
            available: series.len(),
        });
    }
    let lo = anchor_index + 1 - window_len;
    Ok(PriceSeries {
        ticker: series.ticker.clone(),
        dates: series.dates[lo..=anchor_index].to_vec(),
        closes: series.closes[lo..=anchor_index].to_vec(),
    })
}

/// The `horizon` prices strictly after `anchor_index`. Used for labelling only.
pub fn forward_slice(series: &PriceSeries, anchor_index: usize, horizon: usize) -> Result<PriceSeries> {
    if horizon == 0 || anchor_index + horizon >= series.len() {
        return Err(Error::Horizon {
            anchor: anchor_index,
            horizon,
            available: series.len(),
        });
    }
    let range = anchor_index + 1..=anchor_index + horizon;
    Ok(PriceSeries {
        ticker: series.ticker.clone(),
        dates: series.dates[range.clone()].to_vec(),
        closes: series.closes[range].to_vec(),
    })
}

/// Series for the split's tickers, clipped to the split's date range.
/// Tickers absent from `all` (or with no dates in range) are skipped.
pub fn restrict_to_split(all: &[PriceSeries], split: &SplitSpec) -> Vec<PriceSeries> {
    let by_ticker: BTreeMap<&str, &PriceSeries> = all.iter().map(|s| (s.ticker.as_str(), s)).collect();
    split
        .tickers
        .iter()
        .filter_map(|t| by_ticker.get(t.as_str()))
        .filter_map(|s| s.between(split.start, split.end))
        .collect()
}

/// JSON manifest describing the split partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitsManifest {
    pub boundary: NaiveDate,
    pub splits: Vec<SplitSpec>,
}

pub fn write_splits_manifest(path: &Path, manifest: &SplitsManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_splits_manifest(path: &Path) -> Result<SplitsManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Earliest and latest trading dates across all series.
pub fn date_span(all: &[PriceSeries]) -> Option<(NaiveDate, NaiveDate)> {
    let start = all.iter().map(PriceSeries::first_date).min()?;
    let end = all.iter().map(PriceSeries::last_date).max()?;
    Some((start, end))
}
