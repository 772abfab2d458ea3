use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Capability, ClientAdapter, FetchError, Page, RateLimit, SearchQuery};
use crate::error::{Error, Result};
use crate::schema::Platform;

/// Name of the environment variable holding the token for `platform`.
pub fn credential_env_var(platform: Platform) -> String {
    format!("REPOTREND_{}_TOKEN", platform.as_str().to_ascii_uppercase())
}

fn classify_status(status: u16, message: String) -> FetchError {
    match status {
        401 => FetchError::Auth(message),
        403 if !message.to_ascii_lowercase().contains("rate limit") => FetchError::Auth(message),
        403 | 429 | 500..=599 => FetchError::Transient(format!("HTTP {status}: {message}")),
        _ => FetchError::Permanent { status, message },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedPage {
    #[serde(default = "ok_status")]
    pub status: u16,
    #[serde(default)]
    pub items: Vec<serde_json::Value>,
    #[serde(default)]
    pub message: String,
}

fn ok_status() -> u16 {
    200
}

#[derive(Debug, Clone, Deserialize)]
struct FixtureFile {
    target: Platform,
    #[serde(default)]
    capability: Option<Capability>,
    #[serde(default)]
    rate_limit: Option<RateLimit>,
    queries: BTreeMap<String, Vec<RecordedPage>>,
}

/// Replays recorded result pages keyed by search term.
///
/// Fixture file layout:
/// `{"target": "github", "queries": {"Telegram bot": [{"status": 200, "items": [...]}, ...]}}`.
/// Terms without a recording return a single empty page.
#[derive(Debug, Clone)]
pub struct FixtureAdapter {
    target: Platform,
    capability: Capability,
    rate_limit: RateLimit,
    pages: BTreeMap<String, Vec<RecordedPage>>,
    log: Vec<(String, u32, Instant)>,
}

impl FixtureAdapter {
    pub fn new(target: Platform, pages: BTreeMap<String, Vec<RecordedPage>>) -> Self {
        FixtureAdapter {
            target,
            capability: Capability::Api,
            rate_limit: RateLimit::per_second(1000),
            pages,
            log: Vec::new(),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let f: FixtureFile = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut a = FixtureAdapter::new(f.target, f.queries);
        if let Some(c) = f.capability {
            a.capability = c;
        }
        if let Some(r) = f.rate_limit {
            a.rate_limit = r;
        }
        Ok(a)
    }

    pub fn with_rate_limit(mut self, limit: RateLimit) -> Self {
        self.rate_limit = limit;
        self
    }

    /// `(term, page, sent_at)` for every request served.
    pub fn request_log(&self) -> &[(String, u32, Instant)] {
        &self.log
    }
}

impl ClientAdapter for FixtureAdapter {
    fn target(&self) -> Platform {
        self.target
    }

    fn capability(&self) -> Capability {
        self.capability
    }

    fn rate_limit(&self) -> RateLimit {
        self.rate_limit
    }

    fn fetch_page(&mut self, query: &SearchQuery, page: u32) -> Result<Page, FetchError> {
        self.log.push((query.term.clone(), page, Instant::now()));
        let Some(pages) = self.pages.get(&query.term) else {
            return Ok(Page {
                items: Vec::new(),
                has_next: false,
            });
        };
        let idx = page.saturating_sub(1) as usize;
        let Some(rec) = pages.get(idx) else {
            return Ok(Page {
                items: Vec::new(),
                has_next: false,
            });
        };
        if !(200..300).contains(&rec.status) {
            return Err(classify_status(rec.status, rec.message.clone()));
        }
        Ok(Page {
            items: rec.items.clone(),
            has_next: idx + 1 < pages.len(),
        })
    }
}

const GITHUB_PAGE_SIZE: u32 = 100;
/// The search API serves at most this many results per query.
const GITHUB_RESULT_CAP: u64 = 1000;

/// GitHub repository search over the REST API.
pub struct GithubAdapter {
    agent: ureq::Agent,
    base_url: String,
    token: Option<String>,
    rate_limit: RateLimit,
}

impl GithubAdapter {
    /// Reads the token from `REPOTREND_GITHUB_TOKEN` when set.
    pub fn from_env(rate_limit: RateLimit) -> Self {
        let token = std::env::var(credential_env_var(Platform::Github)).ok();
        Self::new("https://api.github.com", token, rate_limit)
    }

    pub fn new(base_url: impl Into<String>, token: Option<String>, rate_limit: RateLimit) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .user_agent("repotrend")
            .build()
            .into();
        GithubAdapter {
            agent,
            base_url: base_url.into(),
            token,
            rate_limit,
        }
    }
}

#[derive(Deserialize)]
struct GithubSearch {
    total_count: u64,
    items: Vec<serde_json::Value>,
}

impl ClientAdapter for GithubAdapter {
    fn target(&self) -> Platform {
        Platform::Github
    }

    fn capability(&self) -> Capability {
        Capability::Api
    }

    fn rate_limit(&self) -> RateLimit {
        self.rate_limit
    }

    fn fetch_page(&mut self, query: &SearchQuery, page: u32) -> Result<Page, FetchError> {
        let url = format!("{}/search/repositories", self.base_url.trim_end_matches('/'));
        let mut req = self
            .agent
            .get(&url)
            .query("q", &query.term)
            .query("per_page", GITHUB_PAGE_SIZE.to_string())
            .query("page", page.to_string())
            .header("Accept", "application/vnd.github+json");
        if let Some(token) = &self.token {
            req = req.header("Authorization", format!("Bearer {token}"));
        }
        let mut resp = req.call().map_err(|e| FetchError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| FetchError::Transient(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(classify_status(status, body));
        }
        let parsed: GithubSearch = serde_json::from_str(&body).map_err(|e| FetchError::Permanent {
            status,
            message: format!("unexpected response body: {e}"),
        })?;
        let served = page as u64 * GITHUB_PAGE_SIZE as u64;
        let has_next = parsed.items.len() as u32 == GITHUB_PAGE_SIZE
            && served < parsed.total_count.min(GITHUB_RESULT_CAP);
        Ok(Page {
            items: parsed.items,
            has_next,
        })
    }
}
