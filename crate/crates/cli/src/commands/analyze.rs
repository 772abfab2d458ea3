use std::collections::BTreeMap;

use repotrend::analytics::{
    api_support_correlation, language_distribution, lifespan_histogram, monthly_new_repos, platform_counts,
    series_svg, RecordFilter, TimeSeries,
};
use repotrend::select::{indicator_vector, peel_fronts, Exclusion};
use serde_json::json;

use super::load_records;
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::output::{slug, Run};

fn write_series(run: &mut Run, stem: &str, title: &str, series: &TimeSeries) -> Result<(), CliError> {
    run.write_csv(
        &format!("{stem}.csv"),
        &["bucket", "value"],
        series.points().iter().map(|(b, v)| [b.to_string(), v.to_string()]),
    )?;
    run.write_svg(&format!("{stem}.svg"), &series_svg(series, title))
}

pub fn stats(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut run = Run::start("stats", cfg, json!({ "top_platforms": cfg.report.top_platforms }))?;
    let records = load_records(cfg, &mut run)?;

    let hist = lifespan_histogram(&records)?;
    run.write_csv(
        "lifespan_histogram.csv",
        &["lifespan_days", "count"],
        hist.counts.iter().map(|(d, n)| [d.to_string(), n.to_string()]),
    )?;

    let counts = platform_counts(&records);
    run.write_csv(
        "platform_counts.csv",
        &["platform", "count"],
        counts.iter().map(|(p, n)| [p.clone(), n.to_string()]),
    )?;

    let langs = language_distribution(&records, cfg.report.top_platforms);
    run.write_csv(
        "languages.csv",
        &["platform", "language", "count"],
        langs
            .iter()
            .flat_map(|(p, m)| m.iter().map(move |(l, n)| [p.clone(), l.clone(), n.to_string()])),
    )?;

    write_series(&mut run, "monthly_all", "new repositories per month", &monthly_new_repos(&records, &RecordFilter::All))?;
    let mut targets: Vec<_> = records.iter().map(|r| r.platform).collect();
    targets.sort();
    targets.dedup();
    for t in targets {
        let series = monthly_new_repos(&records, &RecordFilter::Collaboration(t));
        write_series(&mut run, &format!("monthly_target_{t}"), &format!("new {t} repositories per month"), &series)?;
    }
    for p in counts.keys() {
        let series = monthly_new_repos(&records, &RecordFilter::Social(p.clone()));
        write_series(&mut run, &format!("monthly_social_{}", slug(p)), &format!("new {p} bot repositories per month"), &series)?;
    }

    let rho = if cfg.report.api_levels.is_empty() {
        None
    } else {
        let configured: Vec<String> = cfg.report.api_levels.keys().map(|k| k.to_lowercase()).collect();
        if let Some(missing) = counts.keys().find(|p| !configured.contains(&p.to_lowercase())) {
            return Err(CliError::validation(format!(
                "report.api_levels has no entry for platform {missing:?}"
            )));
        }
        match api_support_correlation(&counts, &cfg.report.api_levels) {
            Ok(rho) => Some(rho),
            Err(e) => {
                log::warn!("API support correlation left empty: {e}");
                None
            }
        }
    };
    let summary = json!({
        "records": records.len(),
        "zero_day_fraction": hist.zero_day_fraction,
        "platform_counts": counts,
        "api_support_rho": rho,
    });
    run.write_json("stats_summary.json", &summary)?;
    run.finish()
}

pub fn select(cfg: &PipelineConfig, layers: usize) -> Result<(), CliError> {
    let now = cfg
        .now
        .ok_or_else(|| CliError::validation("select needs a reference time: pass --now or set `now` in the config"))?;
    if layers == 0 {
        return Err(CliError::validation("--layers must be at least 1"));
    }
    let mut run = Run::start("select", cfg, json!({ "layers": layers }))?;
    let records = load_records(cfg, &mut run)?;
    let mut vectors = Vec::new();
    let mut excluded = Vec::new();
    for r in &records {
        match indicator_vector(r, now)? {
            Ok(v) => vectors.push(v),
            Err(Exclusion::UnknownCommits) => {
                excluded.push([r.platform.to_string(), r.repo_id.clone(), "unknown_commit_count".to_string()])
            }
        }
    }
    let layer_of: BTreeMap<usize, usize> = peel_fronts(&vectors, layers).into_iter().collect();
    let rows = layer_of.iter().map(|(&i, &layer)| {
        let v = &vectors[i];
        [
            v.platform.to_string(),
            v.repo_id.clone(),
            v.n_commits.to_string(),
            v.lifespan_days.to_string(),
            v.timeliness_days.to_string(),
            layer.to_string(),
        ]
    });
    log::info!(
        "{} of {} scored records on the first {layers} front(s); {} without a commit count",
        layer_of.len(),
        vectors.len(),
        excluded.len()
    );
    run.write_csv(
        "selected.csv",
        &["platform", "repo_id", "n_commits", "lifespan_days", "timeliness_days", "layer"],
        rows,
    )?;
    run.write_csv("select_excluded.csv", &["platform", "repo_id", "reason"], excluded)?;
    run.finish()
}
