//! Pipeline configuration file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use repotrend::analytics::ApiSupportLevel;
use repotrend::ingest::RateLimit;
use repotrend::textclust::ClustererConfig;
use repotrend::Platform;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Everything a run needs. Relative paths resolve against the directory of
/// the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Social platforms searched for, e.g. `"Telegram"`. Each yields the term `"<name> bot"`.
    pub platforms: Vec<String>,
    /// Collaboration platforms crawled.
    pub targets: Vec<Platform>,
    pub corpus: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub now: Option<DateTime<Utc>>,
    /// One stopword per line; the bundled English list when unset.
    pub stopwords: Option<PathBuf>,
    /// One platform name per line; `platforms` plus `targets` when unset.
    pub platform_names: Option<PathBuf>,
    /// Further words removed from descriptions the same way as platform
    /// names, e.g. `["bot"]` when every search term ends in "bot".
    pub drop_terms: Vec<String>,
    pub english_threshold: f64,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub clusterer: ClustererConfig,
    pub lda: LdaSection,
    pub crawl: CrawlSection,
    pub geocode: GeocodeSection,
    pub report: ReportSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LdaSection {
    pub k: usize,
    /// `50 / k` when unset.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub top_words: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrawlSection {
    /// Recorded responses replayed instead of live requests, per target.
    pub fixtures: BTreeMap<Platform, PathBuf>,
    pub rate_limits: BTreeMap<Platform, RateLimit>,
    pub max_retries: Option<u32>,
    pub retry_delay_ms: Option<u64>,
    /// Mirror resolution order; higher wins.
    pub priority: BTreeMap<Platform, u32>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeocodeSection {
    pub gazetteer: Option<PathBuf>,
    pub endpoint: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// API support level per social platform, for the rank correlation.
    pub api_levels: BTreeMap<String, ApiSupportLevel>,
    pub top_platforms: usize,
    pub terms: Vec<String>,
    /// A cluster belongs to a term when the term is among its top tokens.
    pub membership_k: usize,
    pub neighborhood_k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            platforms: Vec::new(),
            targets: vec![Platform::Github],
            corpus: None,
            out: PathBuf::from("out"),
            seed: 1,
            now: None,
            stopwords: None,
            platform_names: None,
            drop_terms: Vec::new(),
            english_threshold: 0.1,
            ngram_min: 1,
            ngram_max: 2,
            clusterer: ClustererConfig::default(),
            lda: LdaSection::default(),
            crawl: CrawlSection::default(),
            geocode: GeocodeSection::default(),
            report: ReportSection::default(),
        }
    }
}

impl Default for LdaSection {
    fn default() -> Self {
        LdaSection {
            k: 15,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            top_words: 10,
        }
    }
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            api_levels: BTreeMap::new(),
            top_platforms: 5,
            terms: Vec::new(),
            membership_k: 10,
            neighborhood_k: 25,
        }
    }
}

impl PipelineConfig {
    /// Reads `path`, resolves relative paths and checks every input file exists.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("invalid config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.check()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.out);
        for p in [&mut self.corpus, &mut self.stopwords, &mut self.platform_names, &mut self.geocode.gazetteer]
            .into_iter()
            .flatten()
        {
            join(p);
        }
        self.crawl.fixtures.values_mut().for_each(join);
    }

    pub fn check(&self) -> Result<(), CliError> {
        let inputs = [&self.stopwords, &self.platform_names, &self.geocode.gazetteer]
            .into_iter()
            .flatten()
            .chain(self.crawl.fixtures.values());
        for p in inputs {
            if !p.is_file() {
                return Err(CliError::validation(format!("referenced file does not exist: {}", p.display())));
            }
        }
        self.clusterer.validate()?;
        if self.ngram_min < 1 || self.ngram_max < self.ngram_min {
            return Err(CliError::validation(format!(
                "n-gram range must satisfy 1 <= ngram_min <= ngram_max, got ({}, {})",
                self.ngram_min, self.ngram_max
            )));
        }
        Ok(())
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.corpus.clone().unwrap_or_else(|| self.out.join("corpus.jsonl"))
    }
}
