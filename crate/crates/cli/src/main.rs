//! `repotrend`: crawl, normalize and analyze bot repositories.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, NaiveDate, Utc};
use clap::{Parser, Subcommand, ValueEnum};

use crate::config::PipelineConfig;
use crate::error::CliError;

const OUTPUTS: &str = "\
Outputs (all under --out DIR; every run also writes <command>.manifest.json):
  crawl      raw_results.jsonl, crawl_errors.csv
  normalize  the corpus file (default DIR/corpus.jsonl), normalize_errors.csv, mirrors.csv
  geocode    locations.csv, countries.csv
  stats      stats_summary.json, lifespan_histogram.csv, platform_counts.csv,
             languages.csv, monthly_<filter>.csv and .svg
  select     selected.csv, select_excluded.csv
  lda        lda_model.json, lda_topics.csv, lda_documents.csv, lda_perplexity.csv
  stream     stream_events.jsonl, stream_state.json, stream_assignments.csv
  report     weight_series_<term>.csv and .svg, neighborhood_<term>.csv

CSV files start with a `# seed=.. now=..` comment line; JSON files carry the
same values under `meta`.

Exit codes: 0 success, 1 invalid config or input, 2 I/O or network failure.
Credentials come from REPOTREND_<PLATFORM>_TOKEN environment variables.";

#[derive(Debug, Parser)]
#[command(name = "repotrend", version, about, after_long_help = OUTPUTS)]
struct Cli {
    /// Pipeline config (TOML). Defaults apply when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `out` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Corpus file; overrides `corpus` from the config.
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Reference time (RFC 3339 or YYYY-MM-DD) used instead of the wall clock.
    #[arg(long, global = true, value_parser = parse_now)]
    now: Option<DateTime<Utc>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Search the configured targets for "<platform> bot" and store raw results.
    Crawl {
        /// Allow live network requests for targets without a fixture.
        #[arg(long)]
        online: bool,
    },
    /// Turn raw results into corpus records, merging into the corpus file.
    Normalize {
        /// Raw results file; defaults to DIR/raw_results.jsonl.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Resolve owner locations to countries.
    Geocode {
        /// Allow the HTTP geocoder.
        #[arg(long)]
        online: bool,
    },
    /// Lifespans, per-platform counts and series, languages, API correlation.
    Stats,
    /// Pareto non-dominated repositories by commits, lifespan and timeliness.
    Select {
        /// Number of successive fronts to emit.
        #[arg(long, default_value_t = 1)]
        layers: usize,
    },
    /// Fit an LDA topic model to the English descriptions.
    Lda {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        /// Record perplexity every N sweeps (0 disables).
        #[arg(long, default_value_t = 0)]
        trace_every: usize,
    },
    /// Run the stream clusterer over descriptions ordered by creation time.
    Stream {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        merge_radius: Option<f64>,
        #[arg(long)]
        t_gap: Option<u64>,
        /// Seconds per stream time unit.
        #[arg(long)]
        time_unit: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Term-conditioned cluster weight series and token neighborhoods from a stream run.
    Report {
        /// Term to report on; repeatable. Defaults to `report.terms` from the config.
        #[arg(long = "term")]
        terms: Vec<String>,
        #[arg(long, value_enum, default_value_t = BucketKind::Auto)]
        bucket: BucketKind,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    CountTime,
    WallTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BucketKind {
    /// Months in wall-time mode, t_gap-wide units in count-time mode.
    Auto,
    Months,
    Units,
}

fn parse_now(s: &str) -> Result<DateTime<Utc>, String> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc())
        .map_err(|_| format!("expected RFC 3339 or YYYY-MM-DD, got {s:?}"))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => {
            let cfg = PipelineConfig::default();
            cfg.check()?;
            cfg
        }
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(corpus) = &cli.corpus {
        cfg.corpus = Some(corpus.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.now.is_some() {
        cfg.now = cli.now;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Crawl { online } => commands::crawl(&cfg, online),
        Command::Normalize { input } => commands::normalize(&cfg, input),
        Command::Geocode { online } => commands::geocode(&cfg, online),
        Command::Stats => commands::stats(&cfg),
        Command::Select { layers } => commands::select(&cfg, layers),
        Command::Lda {
            k,
            iterations,
            trace_every,
        } => {
            if let Some(k) = k {
                cfg.lda.k = k;
            }
            if let Some(n) = iterations {
                cfg.lda.iterations = n;
            }
            commands::lda(&cfg, trace_every)
        }
        Command::Stream {
            lambda,
            radius,
            merge_radius,
            t_gap,
            time_unit,
            mode,
        } => {
            let c = &mut cfg.clusterer;
            c.lambda = lambda.unwrap_or(c.lambda);
            c.radius = radius.unwrap_or(c.radius);
            c.merge_radius = merge_radius.unwrap_or(c.merge_radius);
            c.t_gap = t_gap.unwrap_or(c.t_gap);
            c.time_unit_secs = time_unit.unwrap_or(c.time_unit_secs);
            if let Some(m) = mode {
                c.mode = match m {
                    Mode::CountTime => repotrend::textclust::TimeMode::CountTime,
                    Mode::WallTime => repotrend::textclust::TimeMode::WallTime,
                };
            }
            c.validate()?;
            commands::stream(&cfg)
        }
        Command::Report { terms, bucket } => commands::report(&cfg, terms, bucket),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
