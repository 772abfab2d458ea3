use std::collections::BTreeMap;

use repotrend::analytics::{cluster_weight_series, series_svg, term_neighborhood, Bucketing};
use repotrend::textclust::{run_stream, sort_stream, ClusterEvent, ClusterEventLog, StateSnapshot, TimeMode};
use repotrend::textprep::{stem, NGRAM_JOINER};
use repotrend::topics::{fit_lda_with, LdaConfig};
use serde_json::{json, Value};

use super::{english_docs, load_records};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::output::{read_jsonl_items, slug, Run};
use crate::BucketKind;

pub fn lda(cfg: &PipelineConfig, trace_every: usize) -> Result<(), CliError> {
    let l = &cfg.lda;
    let alpha = l.alpha.unwrap_or(50.0 / l.k.max(1) as f64);
    let config = LdaConfig::new(l.k, alpha, l.beta, l.iterations, cfg.seed)?;
    let mut run = Run::start(
        "lda",
        cfg,
        json!({ "k": l.k, "alpha": alpha, "beta": l.beta, "iterations": l.iterations, "trace_every": trace_every }),
    )?;
    let records = load_records(cfg, &mut run)?;
    let docs: Vec<_> = english_docs(cfg, &records)?
        .into_iter()
        .filter(|d| !d.tokens.is_empty())
        .collect();
    let mut trace = Vec::new();
    let model = fit_lda_with(&docs, &config, |sweep, m| {
        if trace_every > 0 && (sweep + 1) % trace_every == 0 {
            trace.push([(sweep + 1).to_string(), m.perplexity(&docs).to_string()]);
        }
    })?;

    let mut topic_rows = Vec::new();
    for k in 0..model.num_topics() {
        for (rank, (word, p)) in model.top_words(k, l.top_words)?.into_iter().enumerate() {
            topic_rows.push([k.to_string(), (rank + 1).to_string(), word, p.to_string()]);
        }
    }
    let doc_rows = docs.iter().enumerate().map(|(d, doc)| {
        let theta = model.doc_topic(d);
        let (best, p) = theta
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (k, &p)| if p > acc.1 { (k, p) } else { acc });
        [
            doc.doc_id.platform.to_string(),
            doc.doc_id.repo_id.clone(),
            best.to_string(),
            p.to_string(),
        ]
    });
    run.write_csv("lda_documents.csv", &["platform", "repo_id", "topic", "probability"], doc_rows)?;
    run.write_csv("lda_topics.csv", &["topic", "rank", "word", "probability"], topic_rows)?;
    run.write_csv("lda_perplexity.csv", &["sweep", "perplexity"], trace)?;
    run.write_json("lda_model.json", &model.export())?;
    run.finish()
}

pub fn stream(cfg: &PipelineConfig) -> Result<(), CliError> {
    let mut run = Run::start("stream", cfg, json!({ "clusterer": cfg.clusterer }))?;
    let records = load_records(cfg, &mut run)?;
    let mut docs = english_docs(cfg, &records)?;
    sort_stream(&mut docs);
    let (state, assignments) = run_stream(&docs, &cfg.clusterer)?;
    log::info!(
        "{} documents, {} skipped as empty, {} clusters alive",
        docs.len(),
        state.skipped(),
        state.len()
    );
    let rows = docs.iter().zip(&assignments).map(|(d, a)| {
        let (t, id, action, sim) = match a {
            Some(a) => (
                a.t.to_string(),
                a.cluster_id.to_string(),
                json!(a.action).as_str().unwrap_or_default().to_string(),
                a.similarity.to_string(),
            ),
            None => (String::new(), String::new(), "skipped".to_string(), String::new()),
        };
        [
            d.doc_id.platform.to_string(),
            d.doc_id.repo_id.clone(),
            d.timestamp.to_rfc3339(),
            t,
            id,
            action,
            sim,
        ]
    });
    run.write_csv(
        "stream_assignments.csv",
        &["platform", "repo_id", "timestamp", "t", "cluster_id", "action", "similarity"],
        rows,
    )?;
    run.write_jsonl("stream_events.jsonl", state.log().events())?;
    run.write_json("stream_state.json", &state.snapshot())?;
    run.finish()
}

/// Stems each word of a free-text term the way descriptions are stemmed.
fn normalize_term(term: &str) -> String {
    term.split_whitespace()
        .map(|w| stem(&w.to_lowercase()))
        .collect::<Vec<_>>()
        .join(&NGRAM_JOINER.to_string())
}

pub fn report(cfg: &PipelineConfig, terms: Vec<String>, bucket: BucketKind) -> Result<(), CliError> {
    let terms = if terms.is_empty() { cfg.report.terms.clone() } else { terms };
    if terms.is_empty() {
        return Err(CliError::validation("no report terms: pass --term or set report.terms"));
    }
    let mut run = Run::start("report", cfg, json!({ "terms": terms, "bucket": format!("{bucket:?}") }))?;
    let events_path = cfg.out.join("stream_events.jsonl");
    let state_path = cfg.out.join("stream_state.json");
    run.input("stream_events", &events_path)?;
    run.input("stream_state", &state_path)?;

    let events: Vec<ClusterEvent> = read_jsonl_items(&events_path)?
        .into_iter()
        .map(serde_json::from_value)
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::validation(format!("{}: {e}", events_path.display())))?;
    let log = ClusterEventLog::from_events(events);
    let state_text = std::fs::read_to_string(&state_path).map_err(|e| CliError::io(&state_path, e))?;
    let mut state_value: Value = serde_json::from_str(&state_text)
        .map_err(|e| CliError::validation(format!("{}: {e}", state_path.display())))?;
    if let Some(m) = state_value.as_object_mut() {
        m.remove("meta");
    }
    let state: StateSnapshot = serde_json::from_value(state_value)
        .map_err(|e| CliError::validation(format!("{}: {e}", state_path.display())))?;

    let months = match bucket {
        BucketKind::Months => true,
        BucketKind::Units => false,
        BucketKind::Auto => state.mode == TimeMode::WallTime,
    };
    let bucketing = match (months, state.origin) {
        (true, Some(origin)) => Bucketing::Months {
            origin,
            time_unit_secs: state.time_unit_secs,
        },
        (true, None) => return Err(CliError::validation("month buckets need a wall-time stream run")),
        (false, _) => Bucketing::Units {
            width: cfg.clusterer.t_gap as f64,
        },
    };

    let k = cfg.report.membership_k;
    for term in &terms {
        let token = normalize_term(term);
        let name = slug(term);
        let series = cluster_weight_series(&log, &token, bucketing, k);
        run.write_csv(
            &format!("weight_series_{name}.csv"),
            &["bucket", "weight"],
            series.points().iter().map(|(b, v)| [b.to_string(), v.to_string()]),
        )?;
        run.write_svg(
            &format!("weight_series_{name}.svg"),
            &series_svg(&series, &format!("weight of clusters about {term}")),
        )?;
        let cloud: BTreeMap<String, f64> = term_neighborhood(&state.clusters, &token, cfg.report.neighborhood_k, k);
        let mut ranked: Vec<(String, f64)> = cloud.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        run.write_csv(
            &format!("neighborhood_{name}.csv"),
            &["token", "weight"],
            ranked.into_iter().map(|(t, w)| [t, w.to_string()]),
        )?;
    }
    run.finish()
}
