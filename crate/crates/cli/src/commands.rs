use std::path::{Path, PathBuf};

use finbench_core::config::RunConfig;
use finbench_core::corpus::{corpus_report, distribution_table, read_corpus, write_corpus, CorpusRecord};
use finbench_core::eval::{comparison_table, random_baseline, run_model, score_run, EvalReport, HttpConfig, Metric, ModelAdapter};
use finbench_core::forecast::{run_baseline, ForecastMethod};
use finbench_core::market::{write_price_table, write_splits_manifest, SplitName};
use finbench_core::pipeline::{build_corpus, load_market, split_market, BuildFilter};
use finbench_core::plot::plot_window;
use finbench_core::task::TaskId;
use finbench_core::{Error, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}

fn corpus_path(cfg: &RunConfig, given: Option<&Path>) -> PathBuf {
    given.map_or_else(|| cfg.output_dir.join("corpus.jsonl"), Path::to_path_buf)
}

/// File-name safe version of a model or method name.
fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c.to_ascii_lowercase() } else { '_' })
        .collect()
}

fn records_for(path: &Path, split: SplitName, tasks: &[TaskId]) -> Result<Vec<CorpusRecord>> {
    let recs: Vec<CorpusRecord> = read_corpus(path)?
        .into_iter()
        .filter(|r| r.sample.split == split && (tasks.is_empty() || tasks.contains(&r.sample.task)))
        .collect();
    if recs.is_empty() {
        return Err(Error::Config(format!("{} has no {split} records for the requested tasks", path.display())));
    }
    Ok(recs)
}

pub fn ingest(cfg: &RunConfig, export: bool) -> Result<()> {
    let market = load_market(cfg)?;
    let manifest = split_market(&market, cfg)?;
    let out = &cfg.output_dir;
    ensure_dir(out)?;
    write_splits_manifest(&out.join("splits.json"), &manifest)?;
    println!("{} tickers loaded; boundary {}", market.series.len(), manifest.boundary);
    println!("{:<8} {:<10} {:>8} {:>12} {:>12}", "Split", "Tickers", "Count", "Start", "End");
    for s in &manifest.splits {
        println!(
            "{:<8} {:<10} {:>8} {:>12} {:>12}",
            s.name.to_string(),
            format!("{:?}", s.ticker_set),
            s.tickers.len(),
            s.start,
            s.end
        );
    }
    if export {
        write_price_table(&out.join("prices.csv"), &market.series)?;
        let ranking = market.universe.ranked_tickers.join("\n") + "\n";
        let path = out.join("universe.txt");
        std::fs::write(&path, ranking).map_err(io_err(&path))?;
        println!("wrote prices.csv and universe.txt");
    }
    Ok(())
}

pub fn generate(cfg: &RunConfig, splits: &[SplitName], tasks: &[TaskId], serial: bool) -> Result<()> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if serial {
        cfg.parallel = false;
    }
    let out = cfg.output_dir.clone();
    ensure_dir(&out)?;
    let market = load_market(&cfg)?;
    let filter = BuildFilter {
        tasks: tasks.to_vec(),
        splits: splits.to_vec(),
    };
    let build = build_corpus(&market, &cfg, &filter)?;
    let mut manifest = write_corpus(&build.records, &out.join("corpus.jsonl"))?;
    manifest.config_hash = Some(cfg.hash());
    manifest.write(&out.join("manifest.json"))?;
    write_splits_manifest(&out.join("splits.json"), &build.splits)?;
    write_json(&out.join("jobs.json"), &build.jobs)?;
    cfg.save(&out.join("config.toml"))?;

    let report = corpus_report(&build.records);
    println!("{} records written to {}", report.total, out.join("corpus.jsonl").display());
    println!("corpus sha256 {}", manifest.corpus_sha256);
    println!("config hash   {}", cfg.hash());
    for split in report.distributions.keys() {
        println!("\n{split} class distribution (%)");
        print!("{}", distribution_table(&report, *split));
    }
    print_chain_stats(&report.chains);
    Ok(())
}

fn print_chain_stats(c: &finbench_core::cot::ChainStats) {
    if c.compute_in_cot.count + c.scenario_aware.count == 0 {
        return;
    }
    println!("\nreasoning chains: compute {} (mean {:.1} words), scenario {} (mean {:.1} words)",
        c.compute_in_cot.count, c.compute_in_cot.mean_words, c.scenario_aware.count, c.scenario_aware.mean_words);
    if let Some(r) = c.length_ratio {
        println!("scenario / compute length ratio {r:.2}");
    }
}

pub fn baseline(cfg: &RunConfig, methods: &[ForecastMethod], split: SplitName, corpus: Option<&Path>) -> Result<()> {
    cfg.forecast.validate()?;
    let path = corpus_path(cfg, corpus);
    let records = records_for(&path, split, &TaskId::PREDICTION)?;
    let methods = if methods.is_empty() { ForecastMethod::STATISTICAL.to_vec() } else { methods.to_vec() };
    let dir = cfg.output_dir.join("reports");
    ensure_dir(&dir)?;
    let mut reports = Vec::new();
    for m in methods {
        let mut report = run_baseline(m, &records, &cfg.bench, &cfg.forecast)?;
        report.config_hash = Some(cfg.hash());
        let file = dir.join(format!("baseline_{}_{}.json", file_stem(m.name()), split.slug()));
        report.write(&file)?;
        reports.push(report);
    }
    println!("{split} accuracy (%) of forecasting baselines, {} records", records.len());
    print!("{}", comparison_table(&reports, Metric::Accuracy));
    Ok(())
}

pub enum Source {
    Replay(PathBuf),
    Endpoint(String),
    Random(u64),
}

pub struct EvalRequest {
    pub source: Source,
    pub http: HttpConfig,
    pub model: Option<String>,
    pub split: SplitName,
    pub tasks: Vec<TaskId>,
    pub corpus: Option<PathBuf>,
}

pub fn eval(cfg: &RunConfig, req: EvalRequest) -> Result<()> {
    let path = corpus_path(cfg, req.corpus.as_deref());
    let records = records_for(&path, req.split, &req.tasks)?;
    let dir = cfg.output_dir.join("reports");
    ensure_dir(&dir)?;
    let (mut report, warnings) = match req.source {
        Source::Random(seed) => {
            let mut r = random_baseline(&records, seed);
            if let Some(m) = &req.model {
                r.model = m.clone();
            }
            (r, Vec::new())
        }
        Source::Replay(file) => {
            let model = req
                .model
                .clone()
                .unwrap_or_else(|| file.file_stem().map_or("replay".into(), |s| s.to_string_lossy().into_owned()));
            run_and_score(cfg, &records, ModelAdapter::FileReplay(file.clone()), model, req.split, serde_json::json!({ "responses": file }))?
        }
        Source::Endpoint(url) => {
            let model = req.model.clone().unwrap_or_else(|| "endpoint".into());
            let mut http = req.http;
            http.endpoint = url.clone();
            let info = serde_json::json!({ "endpoint": url, "max_in_flight": http.max_in_flight });
            run_and_score(cfg, &records, ModelAdapter::Http(http), model, req.split, info)?
        }
    };
    report.config_hash = Some(cfg.hash());
    let file = dir.join(format!("eval_{}_{}.json", file_stem(&report.model), req.split.slug()));
    report.write(&file)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!("{} on {} ({} records)", report.model, req.split, records.len());
    print!("{}", comparison_table(std::slice::from_ref(&report), Metric::Accuracy));
    println!("success rate {:.1}%", 100.0 * report.average_success_rate);
    println!("report written to {}", file.display());
    Ok(())
}

fn run_and_score(
    cfg: &RunConfig,
    records: &[CorpusRecord],
    adapter: ModelAdapter,
    model: String,
    split: SplitName,
    info: serde_json::Value,
) -> Result<(EvalReport, Vec<String>)> {
    let tdir = cfg.output_dir.join("transcripts");
    ensure_dir(&tdir)?;
    let transcript = tdir.join(format!("{}_{}.jsonl", file_stem(&model), split.slug()));
    let outcome = run_model(&adapter, records, Some(&transcript))?;
    let mut report = score_run(&model, records, &outcome.responses());
    report.config = info;
    Ok((report, outcome.warnings))
}

pub fn report(cfg: &RunConfig, files: &[PathBuf], metric: Metric, corpus: Option<&Path>) -> Result<()> {
    if let Some(path) = corpus {
        let records = read_corpus(path)?;
        let r = corpus_report(&records);
        println!("{} records", r.total);
        for (split, n) in &r.split_totals {
            println!("  {split:<8} {n}");
        }
        for split in r.distributions.keys() {
            println!("\n{split} class distribution (%)");
            print!("{}", distribution_table(&r, *split));
        }
        print_chain_stats(&r.chains);
        if files.is_empty() {
            return Ok(());
        }
        println!();
    }
    let files = if files.is_empty() { default_reports(cfg)? } else { files.to_vec() };
    if files.is_empty() {
        return Err(Error::Config("no report files given or found".into()));
    }
    let reports = files.iter().map(|f| EvalReport::read(f)).collect::<Result<Vec<_>>>()?;
    print!("{}", comparison_table(&reports, metric));
    Ok(())
}

fn default_reports(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let dir = cfg.output_dir.join("reports");
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(io_err(&dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

pub fn plot(cfg: &RunConfig, id: Option<&str>, index: Option<usize>, corpus: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let path = corpus_path(cfg, corpus);
    let records = read_corpus(&path)?;
    let rec = match (id, index) {
        (Some(id), _) => records.iter().find(|r| r.id == id),
        (None, Some(i)) => records.get(i),
        (None, None) => None,
    }
    .ok_or_else(|| Error::Config(format!("no such record in {}", path.display())))?;
    let target = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let dir = cfg.output_dir.join("plots");
            ensure_dir(&dir)?;
            dir.join(format!("{}.svg", rec.id))
        }
    };
    plot_window(&rec.sample, &target)?;
    println!("{}", target.display());
    Ok(())
}
