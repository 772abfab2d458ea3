use std::path::PathBuf;
use std::time::Duration;

use repotrend::analytics::country_counts;
use repotrend::ingest::{
    build_queries, collect_records, dedupe_mirrors, geocode as lookup, ClientAdapter, Crawler, FixtureAdapter,
    GeoCache, Gazetteer, Geocoder, GithubAdapter, HttpGeocoder, PlatformPriority, RateLimit, RawResult,
    RetryPolicy,
};
use repotrend::schema::append_records;
use repotrend::{CorpusHandle, Error, Platform};
use serde_json::json;

use super::load_records;
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::output::{read_jsonl_items, Run};

/// Default pacing for live search APIs (authenticated GitHub search allows 30/min).
fn default_rate_limit() -> RateLimit {
    RateLimit {
        max_requests: 30,
        window_secs: 60.0,
    }
}

fn adapter_for(cfg: &PipelineConfig, target: Platform, online: bool) -> Result<Box<dyn ClientAdapter>, CliError> {
    let limit = cfg.crawl.rate_limits.get(&target).copied();
    if let Some(path) = cfg.crawl.fixtures.get(&target) {
        let mut a = FixtureAdapter::from_file(path)?;
        if a.target() != target {
            return Err(CliError::validation(format!(
                "fixture {} records {} results but is configured for {target}",
                path.display(),
                a.target()
            )));
        }
        if let Some(l) = limit {
            a = a.with_rate_limit(l);
        }
        return Ok(Box::new(a));
    }
    if !online {
        return Err(CliError::validation(format!(
            "no fixture configured for {target}; pass --online to query it live"
        )));
    }
    match target {
        Platform::Github => Ok(Box::new(GithubAdapter::from_env(limit.unwrap_or_else(default_rate_limit)))),
        other => Err(CliError::validation(format!(
            "no live client for {other}; configure crawl.fixtures.{other} with recorded results"
        ))),
    }
}

pub fn crawl(cfg: &PipelineConfig, online: bool) -> Result<(), CliError> {
    let mut run = Run::start("crawl", cfg, json!({ "online": online }))?;
    let retry = RetryPolicy {
        max_retries: cfg.crawl.max_retries.unwrap_or(RetryPolicy::default().max_retries),
        base_delay: cfg
            .crawl
            .retry_delay_ms
            .map_or(RetryPolicy::default().base_delay, Duration::from_millis),
    };
    let mut results: Vec<RawResult> = Vec::new();
    let mut errors: Vec<[String; 3]> = Vec::new();
    for &target in &cfg.targets {
        let queries = build_queries(&cfg.platforms, &[target])?;
        let mut crawler = Crawler::new(adapter_for(cfg, target, online)?, retry)?;
        for q in &queries {
            let mut n = 0;
            for page in crawler.search(q)? {
                match page {
                    Ok(p) => {
                        n += p.results.len();
                        results.extend(p.results);
                    }
                    Err(e @ Error::Credential { .. }) => return Err(e.into()),
                    Err(e) => {
                        log::warn!("{e}");
                        errors.push([target.to_string(), q.term.clone(), e.to_string()]);
                    }
                }
            }
            log::info!("{target}: {n} results for {:?}", q.term);
        }
    }
    run.write_jsonl("raw_results.jsonl", &results)?;
    run.write_csv("crawl_errors.csv", &["target", "term", "message"], errors)?;
    run.finish()
}

pub fn normalize(cfg: &PipelineConfig, input: Option<PathBuf>) -> Result<(), CliError> {
    let input = input.unwrap_or_else(|| cfg.out.join("raw_results.jsonl"));
    let mut run = Run::start("normalize", cfg, json!({}))?;
    run.input("raw_results", &input)?;
    let raws: Vec<RawResult> = read_jsonl_items(&input)?
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            serde_json::from_value(v)
                .map_err(|e| CliError::validation(format!("{}: result {}: {e}", input.display(), i + 1)))
        })
        .collect::<Result<_, _>>()?;
    let report = collect_records(&raws);
    let priority = if cfg.crawl.priority.is_empty() {
        PlatformPriority::default()
    } else {
        PlatformPriority::new(cfg.crawl.priority.clone())
    };
    let outcome = dedupe_mirrors(&report.records, &priority);

    let corpus = cfg.corpus_path();
    let handle = append_records(&CorpusHandle::open(&corpus)?, &outcome.kept)?;
    log::info!(
        "{} records normalized, {} mirrors dropped, {} errors; corpus holds {}",
        report.records.len(),
        outcome.duplicates.len(),
        report.errors.len(),
        handle.record_count
    );
    run.track("corpus", &corpus)?;
    run.write_csv(
        "normalize_errors.csv",
        &["message"],
        report.errors.iter().map(|e| [e.to_string()]),
    )?;
    run.write_csv(
        "mirrors.csv",
        &["kept_platform", "kept_repo_id", "dropped_platform", "dropped_repo_id"],
        outcome.duplicates.iter().map(|(k, d)| {
            [
                k.platform.to_string(),
                k.repo_id.clone(),
                d.platform.to_string(),
                d.repo_id.clone(),
            ]
        }),
    )?;
    run.finish()
}

pub fn geocode(cfg: &PipelineConfig, online: bool) -> Result<(), CliError> {
    let mut run = Run::start("geocode", cfg, json!({ "online": online }))?;
    let client: Box<dyn Geocoder> = match (&cfg.geocode.endpoint, &cfg.geocode.gazetteer) {
        (Some(url), _) if online => Box::new(HttpGeocoder::new(url.clone())),
        (_, Some(path)) => {
            run.input("gazetteer", path)?;
            Box::new(Gazetteer::from_file(path)?)
        }
        (Some(_), None) => {
            return Err(CliError::validation(
                "geocode.endpoint needs --online; configure geocode.gazetteer for offline use",
            ))
        }
        (None, None) => {
            return Err(CliError::validation(
                "no geocoder configured; set geocode.gazetteer or geocode.endpoint",
            ))
        }
    };
    let records = load_records(cfg, &mut run)?;
    let cache = GeoCache::new();
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for r in &records {
        let Some(loc) = r.owner_location_raw.as_deref().filter(|l| !l.trim().is_empty()) else {
            continue;
        };
        let p = lookup(loc, client.as_ref(), &cache)?;
        let (lat, lon, cc) = match &p {
            Some(p) => (
                p.latitude.to_string(),
                p.longitude.to_string(),
                p.country_code.clone().unwrap_or_default(),
            ),
            None => Default::default(),
        };
        rows.push([r.platform.to_string(), r.repo_id.clone(), loc.to_string(), lat, lon, cc]);
        points.push(p);
    }
    log::info!(
        "{} located records, {} distinct locations, {} unresolved",
        points.len(),
        cache.len(),
        cache.unresolved_count()
    );
    let counts = country_counts(&points);
    let mut country_rows: Vec<[String; 2]> = counts.counts.iter().map(|(c, n)| [c.clone(), n.to_string()]).collect();
    country_rows.push(["unknown".to_string(), counts.unknown.to_string()]);
    run.write_csv(
        "locations.csv",
        &["platform", "repo_id", "location", "latitude", "longitude", "country_code"],
        rows,
    )?;
    run.write_csv("countries.csv", &["country_code", "count"], country_rows)?;
    run.finish()
}
