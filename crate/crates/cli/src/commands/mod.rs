mod acquire;
mod analyze;
mod text;

pub use acquire::{crawl, geocode, normalize};
pub use analyze::{select, stats};
pub use text::{lda, report, stream};

use repotrend::schema::read_corpus;
use repotrend::textprep::{is_english_multiword, Preprocessor, StopWords};
use repotrend::{RepoRecord, TokenDoc};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::output::Run;

/// Reads the corpus and hashes it into the manifest.
fn load_records(cfg: &PipelineConfig, run: &mut Run) -> Result<Vec<RepoRecord>, CliError> {
    let path = cfg.corpus_path();
    let contents = read_corpus(&path)?;
    for s in &contents.skipped {
        log::warn!("{}:{}: skipped ({})", path.display(), s.line, s.message);
    }
    run.input("corpus", &path)?;
    Ok(contents.records)
}

fn platform_names(cfg: &PipelineConfig) -> Result<Vec<String>, CliError> {
    let mut names = listed_platform_names(cfg)?;
    names.extend(cfg.drop_terms.iter().cloned());
    Ok(names)
}

fn listed_platform_names(cfg: &PipelineConfig) -> Result<Vec<String>, CliError> {
    match &cfg.platform_names {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Ok(text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect())
        }
        None => Ok(cfg
            .platforms
            .iter()
            .cloned()
            .chain(cfg.targets.iter().map(|t| t.as_str().to_string()))
            .collect()),
    }
}

fn preprocessor(cfg: &PipelineConfig) -> Result<Preprocessor, CliError> {
    let stopwords = match &cfg.stopwords {
        Some(path) => StopWords::from_file(path)?,
        None => StopWords::english(),
    };
    Ok(Preprocessor::new(
        &platform_names(cfg)?,
        stopwords,
        cfg.ngram_min,
        cfg.ngram_max,
    )?)
}

/// Token documents for records whose description passes the English filter.
fn english_docs(cfg: &PipelineConfig, records: &[RepoRecord]) -> Result<Vec<TokenDoc>, CliError> {
    let pre = preprocessor(cfg)?;
    let docs: Vec<TokenDoc> = records
        .iter()
        .filter(|r| is_english_multiword(&r.description, pre.stopwords(), cfg.english_threshold))
        .map(|r| pre.token_doc(r))
        .collect();
    log::info!("{} of {} descriptions kept by the English filter", docs.len(), records.len());
    Ok(docs)
}
