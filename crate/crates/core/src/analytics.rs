//! Descriptive statistics over the corpus and the clustering event log.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::GeoPoint;
use crate::schema::{lifespan, Platform, RepoRecord};
use crate::textclust::{ClusterEventLog, ClusterId, EventKind, MicroCluster};

/// Level of third-party access a social platform offers, in increasing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiSupportLevel {
    NoApi = 0,
    LimitedApi = 1,
    Api = 2,
    BotApi = 3,
}

impl ApiSupportLevel {
    pub fn ordinal(self) -> u8 {
        self as u8
    }
}

impl FromStr for ApiSupportLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "no_api" => Ok(Self::NoApi),
            "limited_api" => Ok(Self::LimitedApi),
            "api" => Ok(Self::Api),
            "bot_api" => Ok(Self::BotApi),
            other => Err(Error::Config(format!("unknown API support level {other:?}"))),
        }
    }
}

/// A time-series bucket: a calendar month or an integer time-unit index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bucket {
    Month { year: i32, month: u32 },
    Unit(i64),
}

impl Bucket {
    pub fn month_of(ts: DateTime<Utc>) -> Self {
        Bucket::Month {
            year: ts.year(),
            month: ts.month(),
        }
    }

    fn next(self) -> Self {
        match self {
            Bucket::Month { year, month: 12 } => Bucket::Month {
                year: year + 1,
                month: 1,
            },
            Bucket::Month { year, month } => Bucket::Month {
                year,
                month: month + 1,
            },
            Bucket::Unit(i) => Bucket::Unit(i + 1),
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bucket::Month { year, month } => write!(f, "{year:04}-{month:02}"),
            Bucket::Unit(i) => write!(f, "{i}"),
        }
    }
}

/// Values over strictly increasing buckets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    points: Vec<(Bucket, f64)>,
}

impl TimeSeries {
    pub fn new(points: Vec<(Bucket, f64)>) -> Result<Self> {
        if let Some(w) = points.windows(2).find(|w| w[1].0 <= w[0].0) {
            return Err(Error::Validation(format!(
                "time-series buckets must strictly increase: {} then {}",
                w[0].0, w[1].0
            )));
        }
        Ok(TimeSeries { points })
    }

    pub fn points(&self) -> &[(Bucket, f64)] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn get(&self, bucket: Bucket) -> Option<f64> {
        self.points
            .binary_search_by(|(b, _)| b.cmp(&bucket))
            .ok()
            .map(|i| self.points[i].1)
    }

    /// Fills every bucket between the first and last with `fill(prev_value)`.
    fn gap_filled(sparse: BTreeMap<Bucket, f64>, fill: impl Fn(f64) -> f64) -> Self {
        let mut points = Vec::new();
        let mut iter = sparse.into_iter().peekable();
        while let Some((b, v)) = iter.next() {
            points.push((b, v));
            if let Some(&(next, _)) = iter.peek() {
                let mut cur = b.next();
                while cur < next {
                    points.push((cur, fill(v)));
                    cur = cur.next();
                }
            }
        }
        TimeSeries { points }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LifespanHistogram {
    /// Lifespan in days -> number of records.
    pub counts: BTreeMap<i64, usize>,
    /// Share of records with a lifespan of 0 days; `None` for an empty corpus.
    pub zero_day_fraction: Option<f64>,
}

pub fn lifespan_histogram(records: &[RepoRecord]) -> Result<LifespanHistogram> {
    let mut counts = BTreeMap::new();
    for r in records {
        *counts.entry(lifespan(r)?).or_insert(0) += 1;
    }
    let zero_day_fraction = if records.is_empty() {
        None
    } else {
        Some(counts.get(&0).copied().unwrap_or(0) as f64 / records.len() as f64)
    };
    Ok(LifespanHistogram {
        counts,
        zero_day_fraction,
    })
}

/// The social platform named by a search term such as `"Telegram bot"`.
pub fn social_platform_of(term: &str) -> String {
    let trimmed = term.trim();
    let words: Vec<&str> = trimmed.split_whitespace().collect();
    match words.split_last() {
        Some((last, rest)) if last.eq_ignore_ascii_case("bot") && !rest.is_empty() => rest.join(" "),
        _ => trimmed.to_string(),
    }
}

fn social_platforms(r: &RepoRecord) -> BTreeSet<String> {
    r.matched_searchterms.iter().map(|t| social_platform_of(t)).collect()
}

/// Which records a per-platform report covers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordFilter {
    All,
    Collaboration(Platform),
    /// Records matched by a search term for this social platform (case-insensitive).
    Social(String),
}

impl RecordFilter {
    pub fn matches(&self, r: &RepoRecord) -> bool {
        match self {
            RecordFilter::All => true,
            RecordFilter::Collaboration(p) => r.platform == *p,
            RecordFilter::Social(name) => social_platforms(r).iter().any(|s| s.eq_ignore_ascii_case(name)),
        }
    }
}

/// New repositories per calendar month of `created_at`, zero-filled between
/// the first and last month.
pub fn monthly_new_repos(records: &[RepoRecord], filter: &RecordFilter) -> TimeSeries {
    let mut sparse = BTreeMap::new();
    for r in records.iter().filter(|r| filter.matches(r)) {
        *sparse.entry(Bucket::month_of(r.created_at)).or_insert(0.0) += 1.0;
    }
    TimeSeries::gap_filled(sparse, |_| 0.0)
}

/// Repositories per social platform. A record matched by several platforms'
/// search terms counts once for each.
pub fn platform_counts(records: &[RepoRecord]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in records {
        for p in social_platforms(r) {
            *out.entry(p).or_insert(0) += 1;
        }
    }
    out
}

/// The `n` largest entries by count, ties by name.
pub fn top_platforms(counts: &BTreeMap<String, usize>, n: usize) -> Vec<String> {
    let mut v: Vec<(&String, &usize)> = counts.iter().collect();
    v.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter().take(n).map(|(k, _)| k.clone()).collect()
}

pub const UNKNOWN: &str = "unknown";

/// Primary-language counts for the `top_n` social platforms by repository count.
pub fn language_distribution(records: &[RepoRecord], top_n: usize) -> BTreeMap<String, BTreeMap<String, usize>> {
    let top = top_platforms(&platform_counts(records), top_n);
    let mut out: BTreeMap<String, BTreeMap<String, usize>> =
        top.iter().map(|p| (p.clone(), BTreeMap::new())).collect();
    for r in records {
        let lang = r.primary_language.clone().unwrap_or_else(|| UNKNOWN.to_string());
        for p in social_platforms(r) {
            if let Some(m) = out.get_mut(&p) {
                *m.entry(lang.clone()).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Average (mid) ranks, 1-based.
pub fn mid_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation with mid-ranks for ties.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Validation(format!(
            "rank correlation needs equal lengths, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Validation("rank correlation needs at least two pairs".into()));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::Validation("rank correlation input contains NaN".into()));
    }
    let rx = mid_ranks(xs);
    let ry = mid_ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Validation("rank correlation is undefined for constant input".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Rank correlation between repository counts and API support levels.
pub fn api_support_correlation(
    counts: &BTreeMap<String, usize>,
    levels: &BTreeMap<String, ApiSupportLevel>,
) -> Result<f64> {
    let lookup: HashMap<String, ApiSupportLevel> =
        levels.iter().map(|(k, v)| (k.to_lowercase(), *v)).collect();
    let mut xs = Vec::with_capacity(counts.len());
    let mut ys = Vec::with_capacity(counts.len());
    for (platform, &count) in counts {
        let level = lookup.get(&platform.to_lowercase()).ok_or_else(|| {
            Error::Validation(format!("no API support level configured for platform {platform:?}"))
        })?;
        xs.push(count as f64);
        ys.push(level.ordinal() as f64);
    }
    spearman_rho(&xs, &ys)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CountryCounts {
    pub counts: BTreeMap<String, usize>,
    pub unknown: usize,
}

/// Contributors per country; unresolved points and points without a country
/// code are counted as unknown.
pub fn country_counts(points: &[Option<GeoPoint>]) -> CountryCounts {
    let mut out = CountryCounts::default();
    for p in points {
        match p.as_ref().and_then(|p| p.country_code.as_deref()) {
            Some(cc) => *out.counts.entry(cc.to_string()).or_insert(0) += 1,
            None => out.unknown += 1,
        }
    }
    out
}

/// Maps stream time to buckets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bucketing {
    /// `floor(t / width)`.
    Units { width: f64 },
    /// Calendar month of `origin + t * time_unit_secs`.
    Months { origin: DateTime<Utc>, time_unit_secs: u64 },
}

impl Bucketing {
    pub fn bucket(&self, t: f64) -> Bucket {
        match *self {
            Bucketing::Units { width } => Bucket::Unit((t / width).floor() as i64),
            Bucketing::Months {
                origin,
                time_unit_secs,
            } => {
                let ms = (t * time_unit_secs as f64 * 1000.0).round() as i64;
                Bucket::month_of(origin + Duration::milliseconds(ms))
            }
        }
    }
}

fn contains_term(tokens: &[(String, f64)], term: &str, membership_k: usize) -> bool {
    tokens.iter().take(membership_k).any(|(t, _)| t == term)
}

/// Summed weight of clusters whose top `membership_k` tokens contain `term`,
/// taken at the end of each bucket from each live cluster's latest event.
/// Buckets without events carry the previous value forward.
pub fn cluster_weight_series(
    log: &ClusterEventLog,
    term: &str,
    bucketing: Bucketing,
    membership_k: usize,
) -> TimeSeries {
    let mut live: BTreeMap<ClusterId, (f64, bool)> = BTreeMap::new();
    let mut sparse = BTreeMap::new();
    let events = log.events();
    for (i, e) in events.iter().enumerate() {
        let has = contains_term(&e.top_tokens, term, membership_k);
        match e.event {
            EventKind::Created | EventKind::MergedInto | EventKind::Faded => {
                live.insert(e.ids[0], (e.weight, has));
            }
            EventKind::PairMerged => {
                live.insert(e.ids[0], (e.weight, has));
                if let Some(absorbed) = e.ids.get(1) {
                    live.remove(absorbed);
                }
            }
            EventKind::Removed => {
                live.remove(&e.ids[0]);
            }
        }
        let bucket = bucketing.bucket(e.t);
        let bucket_ends = events.get(i + 1).map_or(true, |n| bucketing.bucket(n.t) != bucket);
        if bucket_ends {
            let total: f64 = live.values().filter(|(_, has)| *has).map(|(w, _)| w).sum();
            sparse.insert(bucket, total);
        }
    }
    TimeSeries::gap_filled(sparse, |v| v)
}

/// Word-cloud data: summed top-`k` token weights over every cluster whose top
/// `membership_k` tokens contain `term`.
pub fn term_neighborhood<'a>(
    clusters: impl IntoIterator<Item = &'a MicroCluster>,
    term: &str,
    k: usize,
    membership_k: usize,
) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for mc in clusters {
        if !contains_term(&mc.top_tokens(membership_k), term, membership_k) {
            continue;
        }
        for (tok, w) in mc.top_tokens(k) {
            *out.entry(tok).or_insert(0.0) += w;
        }
    }
    out
}

/// Renders a series as a standalone SVG polyline.
pub fn series_svg(series: &TimeSeries, title: &str) -> String {
    const W: f64 = 800.0;
    const H: f64 = 300.0;
    const PAD: f64 = 20.0;
    let n = series.len();
    let max = series.points().iter().map(|p| p.1).fold(0.0f64, f64::max);
    let coords: Vec<String> = series
        .points()
        .iter()
        .enumerate()
        .map(|(i, (_, v))| {
            let x = if n > 1 {
                PAD + (W - 2.0 * PAD) * i as f64 / (n - 1) as f64
            } else {
                W / 2.0
            };
            let y = if max > 0.0 {
                H - PAD - (H - 2.0 * PAD) * v / max
            } else {
                H - PAD
            };
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let escaped = title
        .replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;");
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <title>{escaped}</title>\n\
         <polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"{}\"/>\n\
         </svg>\n",
        coords.join(" ")
    )
}
