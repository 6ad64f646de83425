//! Model adapters: replay of stored responses or an HTTP completion endpoint.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::extract_answer;
use crate::corpus::CorpusRecord;
use crate::error::{Error, Result};
use crate::task::Choice;

/// HTTP completion endpoint settings.
///
/// Requests are `{"prompt": …}` and responses `{"completion": …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub endpoint: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    /// Extra attempts after the first failure.
    pub retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff_ms: u64,
    /// Environment variable holding the auth header value.
    pub auth_env: Option<String>,
    pub auth_header: String,
}

impl Default for HttpConfig {
    fn default() -> Self {
        Self {
            endpoint: "http://127.0.0.1:8000/complete".into(),
            timeout_ms: 60_000,
            max_in_flight: 8,
            retries: 3,
            backoff_ms: 500,
            auth_env: Some("FINBENCH_API_KEY".into()),
            auth_header: "Authorization".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelAdapter {
    /// JSONL of `{"id": …, "response": …}` objects.
    FileReplay(PathBuf),
    Http(HttpConfig),
}

/// One line of a run transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub id: String,
    pub prompt: String,
    pub response: String,
    pub extracted: Option<Choice>,
    pub latency_ms: u64,
}

impl TranscriptEntry {
    fn new(record: &CorpusRecord, response: String, latency_ms: u64) -> Self {
        Self {
            id: record.id.clone(),
            prompt: record.sample.prompt(),
            extracted: extract_answer(&response).choice,
            response,
            latency_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutcome {
    pub transcript: Vec<TranscriptEntry>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn responses(&self) -> BTreeMap<String, String> {
        self.transcript.iter().map(|e| (e.id.clone(), e.response.clone())).collect()
    }
}

#[derive(Deserialize)]
struct ReplayLine {
    id: String,
    response: String,
}

/// Reads `{"id", "response"}` JSONL. Transcript files qualify too.
pub fn load_replay(path: &Path) -> Result<BTreeMap<String, String>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: ReplayLine = serde_json::from_str(&line).map_err(|e| Error::Corpus {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.insert(row.id, row.response);
    }
    Ok(out)
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Corpus {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_transcript(path: &Path, entries: &[TranscriptEntry]) -> Result<()> {
    let mut w = TranscriptWriter::create(Some(path))?;
    for e in entries {
        w.append(e)?;
    }
    w.finish()
}

/// Appends transcript lines as they arrive; a no-op without a path.
struct TranscriptWriter {
    path: PathBuf,
    out: Option<BufWriter<File>>,
}

impl TranscriptWriter {
    fn create(path: Option<&Path>) -> Result<Self> {
        let out = match path {
            Some(p) => Some(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
            None => None,
        };
        Ok(Self {
            path: path.map(Path::to_path_buf).unwrap_or_default(),
            out,
        })
    }

    fn append(&mut self, entry: &TranscriptEntry) -> Result<()> {
        if let Some(out) = self.out.as_mut() {
            let line = serde_json::to_string(entry)?;
            writeln!(out, "{line}").map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        if let Some(out) = self.out.as_mut() {
            out.flush().map_err(|e| Error::io(&self.path, e))?;
        }
        Ok(())
    }
}

/// Collects one response per record, writing the transcript to
/// `transcript` when given.
///
/// Failed requests become empty responses. If the endpoint stays
/// unreachable after the retry budget, the run stops with
/// [`Error::Endpoint`] and the transcript holds the records answered so far.
pub fn run_model(adapter: &ModelAdapter, records: &[CorpusRecord], transcript: Option<&Path>) -> Result<RunOutcome> {
    let mut writer = TranscriptWriter::create(transcript)?;
    let mut outcome = RunOutcome::default();
    match adapter {
        ModelAdapter::FileReplay(path) => {
            let mut responses = load_replay(path)?;
            let mut missing = Vec::new();
            for r in records {
                let text = responses.remove(&r.id).unwrap_or_else(|| {
                    missing.push(r.id.clone());
                    String::new()
                });
                let entry = TranscriptEntry::new(r, text, 0);
                writer.append(&entry)?;
                outcome.transcript.push(entry);
            }
            if !missing.is_empty() {
                let msg = format!("{} record(s) missing from {}: {}", missing.len(), path.display(), missing.join(", "));
                tracing::warn!("{msg}");
                outcome.warnings.push(msg);
            }
        }
        ModelAdapter::Http(cfg) => {
            #[cfg(feature = "http")]
            {
                let res = http::run(cfg, records, &mut |entry| {
                    writer.append(&entry)?;
                    outcome.transcript.push(entry);
                    Ok(())
                });
                match res {
                    Ok(warnings) => outcome.warnings.extend(warnings),
                    Err(e) => {
                        writer.finish()?;
                        return Err(e);
                    }
                }
            }
            #[cfg(not(feature = "http"))]
            {
                let _ = cfg;
                return Err(Error::Config("built without the `http` feature".into()));
            }
        }
    }
    writer.finish()?;
    Ok(outcome)
}

#[cfg(feature = "http")]
mod http {
    use std::time::{Duration, Instant};

    use futures::stream::{self, StreamExt};
    use serde::{Deserialize, Serialize};

    use super::{HttpConfig, TranscriptEntry};
    use crate::corpus::CorpusRecord;
    use crate::error::{Error, Result};

    #[derive(Serialize)]
    struct Request<'a> {
        prompt: &'a str,
    }

    #[derive(Deserialize)]
    struct Response {
        completion: String,
    }

    enum Failure {
        /// Connection or timeout failure: the endpoint may be down.
        Unreachable(String),
        /// The endpoint answered but with an error or unusable body.
        Rejected(String),
    }

    async fn attempt(client: &reqwest::Client, cfg: &HttpConfig, auth: Option<&str>, prompt: &str) -> std::result::Result<String, (Failure, bool)> {
        let mut req = client.post(&cfg.endpoint).json(&Request { prompt });
        if let Some(value) = auth {
            req = req.header(cfg.auth_header.as_str(), value);
        }
        let resp = req.send().await.map_err(|e| (Failure::Unreachable(e.to_string()), true))?;
        let status = resp.status();
        if !status.is_success() {
            let retry = status.is_server_error() || status.as_u16() == 429;
            return Err((Failure::Rejected(format!("HTTP {status}")), retry));
        }
        let body: Response = resp
            .json()
            .await
            .map_err(|e| (Failure::Rejected(format!("bad response body: {e}")), false))?;
        Ok(body.completion)
    }

    async fn query(
        client: &reqwest::Client,
        cfg: &HttpConfig,
        auth: Option<&str>,
        prompt: &str,
    ) -> (std::result::Result<String, Failure>, u64) {
        let start = Instant::now();
        let mut delay = cfg.backoff_ms;
        let mut tries = 0;
        let result = loop {
            match attempt(client, cfg, auth, prompt).await {
                Ok(text) => break Ok(text),
                Err((failure, retry)) => {
                    if !retry || tries >= cfg.retries {
                        break Err(failure);
                    }
                    tries += 1;
                    tokio::time::sleep(Duration::from_millis(delay)).await;
                    delay = delay.saturating_mul(2);
                }
            }
        };
        (result, start.elapsed().as_millis() as u64)
    }

    pub(super) fn run(
        cfg: &HttpConfig,
        records: &[CorpusRecord],
        sink: &mut dyn FnMut(TranscriptEntry) -> Result<()>,
    ) -> Result<Vec<String>> {
        if cfg.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be positive".into()));
        }
        let auth = match &cfg.auth_env {
            Some(var) => std::env::var(var).ok(),
            None => None,
        };
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| Error::Endpoint(e.to_string()))?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .map_err(|e| Error::Endpoint(format!("cannot start async runtime: {e}")))?;
        let prompts: Vec<String> = records.iter().map(|r| r.sample.prompt()).collect();

        runtime.block_on(async {
            let mut warnings = Vec::new();
            let mut results = stream::iter(records.iter().zip(&prompts))
                .map(|(rec, prompt)| {
                    let client = &client;
                    let auth = auth.as_deref();
                    async move { (rec, query(client, cfg, auth, prompt).await) }
                })
                .buffered(cfg.max_in_flight);
            while let Some((rec, (result, latency_ms))) = results.next().await {
                let text = match result {
                    Ok(text) => text,
                    Err(Failure::Rejected(msg)) => {
                        let msg = format!("record {}: {msg}", rec.id);
                        tracing::warn!("{msg}");
                        warnings.push(msg);
                        String::new()
                    }
                    Err(Failure::Unreachable(msg)) => {
                        return Err(Error::Endpoint(format!(
                            "{} unreachable after {} retries (record {}): {msg}",
                            cfg.endpoint, cfg.retries, rec.id
                        )));
                    }
                };
                sink(TranscriptEntry::new(rec, text, latency_ms))?;
            }
            Ok(warnings)
        })
    }
}
