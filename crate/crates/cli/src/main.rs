mod commands;

use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use finbench_core::config::RunConfig;
use finbench_core::forecast::ForecastMethod;
use finbench_core::market::SplitName;
use finbench_core::task::TaskId;
use finbench_core::Error;

/// Build, score and report the financial time-series reasoning benchmark.
#[derive(Debug, Parser)]
#[command(name = "finbench", version)]
struct Cli {
    /// Run configuration (TOML). Defaults apply to anything not set.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Base seed for sample generation; overrides `bench.base_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Use the built-in synthetic market instead of a price file.
    #[arg(long, global = true)]
    synthetic: bool,
    /// Long-format price CSV; overrides `data.prices`.
    #[arg(long, global = true)]
    prices: Option<PathBuf>,
    /// Ranked ticker list; overrides `data.universe`.
    #[arg(long, global = true)]
    universe: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(long, short, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load prices and write the split partition (splits.json).
    Ingest(IngestArgs),
    /// Generate the corpus: samples, labels, prompts and reasoning chains.
    Generate(GenerateArgs),
    /// Score statistical forecasting baselines on the prediction tasks.
    Baseline(BaselineArgs),
    /// Score a model from stored responses, an HTTP endpoint, or a random guesser.
    Eval(EvalArgs),
    /// Merge report files into one comparison table, or summarise a corpus.
    Report(ReportArgs),
    /// Draw a sample's price window as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Also write the loaded prices (prices.csv) and ranking (universe.txt).
    #[arg(long)]
    export: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Only these splits (train, test_a, test_b, test_c). Repeatable.
    #[arg(long, value_parser = parse_split)]
    split: Vec<SplitName>,
    /// Only these tasks (slug or short name). Repeatable.
    #[arg(long, value_parser = parse_task)]
    task: Vec<TaskId>,
    /// Run jobs on one thread. Output is identical.
    #[arg(long)]
    serial: bool,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    /// Forecasting method. Repeatable; defaults to the five statistical methods.
    #[arg(long, value_parser = parse_method)]
    method: Vec<ForecastMethod>,
    #[arg(long, value_parser = parse_split, default_value = "test_a")]
    split: SplitName,
    /// Corpus file; defaults to <output>/corpus.jsonl.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["responses", "endpoint", "random"]))]
struct EvalArgs {
    /// JSONL of {"id", "response"} objects.
    #[arg(long)]
    responses: Option<PathBuf>,
    /// HTTP completion endpoint taking {"prompt"} and returning {"completion"}.
    #[arg(long)]
    endpoint: Option<String>,
    /// Uniform random guesser with this seed.
    #[arg(long)]
    random: Option<u64>,
    /// Name shown in reports; defaults from the source.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, value_parser = parse_split, default_value = "test_a")]
    split: SplitName,
    #[arg(long, value_parser = parse_task)]
    task: Vec<TaskId>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Concurrent requests; overrides `http.max_in_flight`.
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Per-request timeout; overrides `http.timeout_ms`.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Retries on transport errors, 5xx and 429; overrides `http.retries`.
    #[arg(long)]
    retries: Option<u32>,
    /// Environment variable holding the auth header value.
    #[arg(long)]
    auth_env: Option<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Accuracy,
    SuccessRate,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Report JSON files. Defaults to every file in <output>/reports.
    reports: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "accuracy")]
    metric: MetricArg,
    /// Print split sizes, class distributions and chain lengths of a corpus.
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("which").required(true).args(["id", "index"]))]
struct PlotArgs {
    /// Record id.
    #[arg(long)]
    id: Option<String>,
    /// Zero-based position in the corpus file.
    #[arg(long)]
    index: Option<usize>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// SVG path; defaults to <output>/plots/<id>.svg.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_split(s: &str) -> Result<SplitName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_task(s: &str) -> Result<TaskId, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<ForecastMethod, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn effective_config(cli: &Cli) -> finbench_core::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.bench.base_seed = seed;
    }
    if let Some(out) = &cli.output {
        cfg.output_dir = out.clone();
    }
    if cli.synthetic {
        cfg.data.synthetic = true;
    }
    if let Some(p) = &cli.prices {
        cfg.data.prices = Some(p.clone());
    }
    if let Some(u) = &cli.universe {
        cfg.data.universe = Some(u.clone());
    }
    Ok(cfg)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Schema { .. } | Error::SchemaVersion { .. } => 2,
        Error::Row { .. }
        | Error::EmptyData(_)
        | Error::Window { .. }
        | Error::Horizon { .. }
        | Error::Math(_)
        | Error::Corpus { .. }
        | Error::Json(_)
        | Error::Io { .. } => 3,
        Error::Endpoint(_) => 4,
        _ => 1,
    }
}

fn run(cli: &Cli) -> finbench_core::Result<()> {
    let cfg = effective_config(cli)?;
    match &cli.command {
        Command::Ingest(a) => commands::ingest(&cfg, a.export),
        Command::Generate(a) => commands::generate(&cfg, &a.split, &a.task, a.serial),
        Command::Baseline(a) => commands::baseline(&cfg, &a.method, a.split, a.corpus.as_deref()),
        Command::Eval(a) => {
            let source = match (&a.responses, &a.endpoint, a.random) {
                (Some(p), _, _) => commands::Source::Replay(p.clone()),
                (_, Some(url), _) => commands::Source::Endpoint(url.clone()),
                (_, _, Some(seed)) => commands::Source::Random(seed),
                _ => unreachable!("clap requires one source"),
            };
            let mut http = cfg.http.clone();
            if let Some(n) = a.max_in_flight {
                http.max_in_flight = n;
            }
            if let Some(t) = a.timeout_ms {
                http.timeout_ms = t;
            }
            if let Some(r) = a.retries {
                http.retries = r;
            }
            if let Some(v) = &a.auth_env {
                http.auth_env = Some(v.clone());
            }
            commands::eval(&cfg, commands::EvalRequest {
                source,
                http,
                model: a.model.clone(),
                split: a.split,
                tasks: a.task.clone(),
                corpus: a.corpus.clone(),
            })
        }
        Command::Report(a) => {
            let metric = match a.metric {
                MetricArg::Accuracy => finbench_core::eval::Metric::Accuracy,
                MetricArg::SuccessRate => finbench_core::eval::Metric::SuccessRate,
            };
            commands::report(&cfg, &a.reports, metric, a.corpus.as_deref())
        }
        Command::Plot(a) => commands::plot(&cfg, a.id.as_deref(), a.index, a.corpus.as_deref(), a.out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        _ => tracing::Level::DEBUG,
    };
    tracing_subscriber::fmt()
        .with_max_level(level)
        .with_ansi(std::io::stderr().is_terminal())
        .with_writer(std::io::stderr)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
