//! Data acquisition: query construction, rate-limited paging over pluggable
//! platform clients, normalization, mirror detection and geocoding.

mod adapters;
mod dedupe;
mod geocode;
mod normalize;

use std::collections::VecDeque;
use std::thread;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::Platform;

pub use adapters::{credential_env_var, FixtureAdapter, GithubAdapter, RecordedPage};
pub use dedupe::{dedupe_mirrors, DedupeOutcome, PlatformPriority};
pub use geocode::{geocode, GeoCache, GeoPoint, Gazetteer, Geocoder, HttpGeocoder};
pub use normalize::{collect_records, normalize, normalize_payload, NormalizeReport};

/// One search term against one collaboration platform.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SearchQuery {
    pub platform_name: String,
    pub term: String,
    pub target: Platform,
}

/// Builds `"<platform> bot"` queries for every social platform and target,
/// ordered by platform, then target.
pub fn build_queries<S: AsRef<str>>(social_platforms: &[S], targets: &[Platform]) -> Result<Vec<SearchQuery>> {
    if social_platforms.is_empty() {
        return Err(Error::Config("at least one social platform is required".into()));
    }
    if targets.is_empty() {
        return Err(Error::Config("at least one collaboration platform is required".into()));
    }
    let mut out = Vec::with_capacity(social_platforms.len() * targets.len());
    for p in social_platforms {
        let name = p.as_ref().trim();
        if name.is_empty() {
            return Err(Error::Config("social platform names must be non-empty".into()));
        }
        for &target in targets {
            out.push(SearchQuery {
                platform_name: name.to_string(),
                term: format!("{name} bot"),
                target,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Capability {
    Api,
    WebScrape,
}

/// At most `max_requests` per `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateLimit {
    pub max_requests: u32,
    pub window_secs: f64,
}

impl RateLimit {
    pub fn per_second(max_requests: u32) -> Self {
        RateLimit {
            max_requests,
            window_secs: 1.0,
        }
    }

    fn window(&self) -> Duration {
        Duration::from_secs_f64(self.window_secs)
    }
}

/// Sliding-window limiter that blocks until a request is allowed.
#[derive(Debug)]
pub struct RateLimiter {
    limit: RateLimit,
    sent: VecDeque<Instant>,
}

impl RateLimiter {
    pub fn new(limit: RateLimit) -> Result<Self> {
        if limit.max_requests == 0 || !(limit.window_secs > 0.0) {
            return Err(Error::Config(format!("invalid rate limit {limit:?}")));
        }
        Ok(RateLimiter {
            limit,
            sent: VecDeque::new(),
        })
    }

    /// Blocks until one more request fits in the window, then records it.
    pub fn acquire(&mut self) {
        let window = self.limit.window();
        loop {
            let now = Instant::now();
            while self.sent.front().is_some_and(|&t| now.duration_since(t) >= window) {
                self.sent.pop_front();
            }
            if self.sent.len() < self.limit.max_requests as usize {
                self.sent.push_back(now);
                return;
            }
            let oldest = *self.sent.front().expect("window is full");
            thread::sleep(window.saturating_sub(now.duration_since(oldest)));
        }
    }
}

/// Failure modes of a single page request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchError {
    /// Worth retrying: timeouts, 5xx, secondary rate limits.
    Transient(String),
    /// Missing, invalid or expired credentials.
    Auth(String),
    Permanent { status: u16, message: String },
}

/// One page of platform-native results.
#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub items: Vec<serde_json::Value>,
    pub has_next: bool,
}

/// A platform search client. A [`Crawler`] owns rate limiting and retries;
/// adapters only perform single requests.
pub trait ClientAdapter {
    fn target(&self) -> Platform;
    fn capability(&self) -> Capability;
    fn rate_limit(&self) -> RateLimit;
    /// Fetches page `page` (1-based) of the results for `query`.
    fn fetch_page(&mut self, query: &SearchQuery, page: u32) -> Result<Page, FetchError>;
}

impl<A: ClientAdapter + ?Sized> ClientAdapter for &mut A {
    fn target(&self) -> Platform {
        (**self).target()
    }

    fn capability(&self) -> Capability {
        (**self).capability()
    }

    fn rate_limit(&self) -> RateLimit {
        (**self).rate_limit()
    }

    fn fetch_page(&mut self, query: &SearchQuery, page: u32) -> Result<Page, FetchError> {
        (**self).fetch_page(query, page)
    }
}

impl<A: ClientAdapter + ?Sized> ClientAdapter for Box<A> {
    fn target(&self) -> Platform {
        (**self).target()
    }

    fn capability(&self) -> Capability {
        (**self).capability()
    }

    fn rate_limit(&self) -> RateLimit {
        (**self).rate_limit()
    }

    fn fetch_page(&mut self, query: &SearchQuery, page: u32) -> Result<Page, FetchError> {
        (**self).fetch_page(query, page)
    }
}

/// A platform-native result tagged with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResult {
    pub target: Platform,
    pub term: String,
    pub retrieved_at: DateTime<Utc>,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawPage {
    pub page: u32,
    pub results: Vec<RawResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each further attempt.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

/// Drives one adapter. The rate limiter is shared by every query sent
/// through the same crawler.
pub struct Crawler<A: ClientAdapter> {
    adapter: A,
    limiter: RateLimiter,
    retry: RetryPolicy,
}

impl<A: ClientAdapter> Crawler<A> {
    pub fn new(adapter: A, retry: RetryPolicy) -> Result<Self> {
        let limiter = RateLimiter::new(adapter.rate_limit())?;
        Ok(Crawler {
            adapter,
            limiter,
            retry,
        })
    }

    pub fn adapter(&self) -> &A {
        &self.adapter
    }

    pub fn into_adapter(self) -> A {
        self.adapter
    }

    /// Pages through `query` until exhaustion or the first error.
    pub fn search(&mut self, query: &SearchQuery) -> Result<SearchPages<'_, A>> {
        if query.target != self.adapter.target() {
            return Err(Error::Config(format!(
                "query for {} sent to a {} adapter",
                query.target,
                self.adapter.target()
            )));
        }
        Ok(SearchPages {
            crawler: self,
            query: query.clone(),
            next_page: 1,
            done: false,
            requests: 0,
        })
    }
}

/// Lazily pages through the results of one query.
pub struct SearchPages<'a, A: ClientAdapter> {
    crawler: &'a mut Crawler<A>,
    query: SearchQuery,
    next_page: u32,
    done: bool,
    requests: u32,
}

impl<A: ClientAdapter> SearchPages<'_, A> {
    /// Number of requests sent so far, retries included.
    pub fn requests_sent(&self) -> u32 {
        self.requests
    }

    fn fetch_with_retry(&mut self, page: u32) -> Result<Page> {
        let mut attempt = 0;
        loop {
            self.crawler.limiter.acquire();
            self.requests += 1;
            match self.crawler.adapter.fetch_page(&self.query, page) {
                Ok(p) => return Ok(p),
                Err(FetchError::Auth(message)) => {
                    return Err(Error::Credential {
                        platform: self.crawler.adapter.target().to_string(),
                        message,
                    })
                }
                Err(FetchError::Permanent { status, message }) => {
                    return Err(Error::Adapter {
                        query: self.query.term.clone(),
                        message: format!("HTTP {status}: {message}"),
                    })
                }
                Err(FetchError::Transient(message)) if attempt >= self.crawler.retry.max_retries => {
                    return Err(Error::Adapter {
                        query: self.query.term.clone(),
                        message: format!("giving up after {} attempts: {message}", attempt + 1),
                    })
                }
                Err(FetchError::Transient(message)) => {
                    let delay = self.crawler.retry.base_delay * 2u32.saturating_pow(attempt);
                    log::warn!(
                        "{} page {page} for {:?} failed ({message}); retrying in {delay:?}",
                        self.crawler.adapter.target(),
                        self.query.term
                    );
                    thread::sleep(delay);
                    attempt += 1;
                }
            }
        }
    }
}

impl<A: ClientAdapter> Iterator for SearchPages<'_, A> {
    type Item = Result<RawPage>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let page_no = self.next_page;
        match self.fetch_with_retry(page_no) {
            Ok(page) => {
                self.next_page += 1;
                self.done = !page.has_next;
                let retrieved_at = Utc::now();
                let target = self.crawler.adapter.target();
                let results = page
                    .items
                    .into_iter()
                    .map(|payload| RawResult {
                        target,
                        term: self.query.term.clone(),
                        retrieved_at,
                        payload,
                    })
                    .collect();
                Some(Ok(RawPage {
                    page: page_no,
                    results,
                }))
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}
