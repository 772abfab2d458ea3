use std::collections::{BTreeSet, HashMap};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde_json::Value;

use super::RawResult;
use crate::error::{Error, Result};
use crate::schema::{Platform, RepoRecord};

/// Candidate JSON paths (dot-separated) per schema field, tried in order.
struct FieldMap {
    id: &'static [&'static str],
    name: &'static [&'static str],
    description: &'static [&'static str],
    created: &'static [&'static str],
    /// The latest of all present values is used.
    activity: &'static [&'static str],
    commits: &'static [&'static str],
    language: &'static [&'static str],
    location: &'static [&'static str],
    forks: &'static [&'static str],
    url: &'static [&'static str],
}

const GITHUB: FieldMap = FieldMap {
    id: &["id", "node_id"],
    name: &["name", "full_name"],
    description: &["description"],
    created: &["created_at"],
    activity: &["pushed_at", "updated_at"],
    commits: &["commit_count", "commits"],
    language: &["language"],
    location: &["owner.location", "owner_location"],
    forks: &["forks_count", "forks"],
    url: &["html_url", "url"],
};

const GITLAB: FieldMap = FieldMap {
    id: &["id"],
    name: &["name", "path_with_namespace"],
    description: &["description"],
    created: &["created_at"],
    activity: &["last_activity_at"],
    commits: &["statistics.commit_count", "commit_count"],
    language: &["language", "primary_language"],
    location: &["owner.location", "namespace.location", "owner_location"],
    forks: &["forks_count"],
    url: &["web_url", "http_url_to_repo"],
};

const BITBUCKET: FieldMap = FieldMap {
    id: &["uuid", "full_name", "id"],
    name: &["name", "slug"],
    description: &["description"],
    created: &["created_on", "created_at"],
    activity: &["updated_on", "last_activity_at"],
    commits: &["commit_count"],
    language: &["language"],
    location: &["owner.location", "owner_location"],
    forks: &["fork_count", "forks_count"],
    url: &["links.html.href", "url"],
};

const GENERIC: FieldMap = FieldMap {
    id: &["id", "shortname", "unix_name"],
    name: &["name", "display_name"],
    description: &["description", "summary", "short_description"],
    created: &["created_at", "date_created", "registered"],
    activity: &["last_activity_at", "date_last_modified", "updated_at"],
    commits: &["commit_count", "commits"],
    language: &["language", "primary_language"],
    location: &["owner_location", "owner.location", "location"],
    forks: &["fork_count", "forks_count"],
    url: &["url", "web_link", "html_url"],
};

fn field_map(platform: Platform) -> &'static FieldMap {
    match platform {
        Platform::Github => &GITHUB,
        Platform::Gitlab => &GITLAB,
        Platform::Bitbucket => &BITBUCKET,
        Platform::Sourceforge | Platform::Launchpad => &GENERIC,
    }
}

fn lookup<'a>(v: &'a Value, path: &str) -> Option<&'a Value> {
    let mut cur = v;
    for part in path.split('.') {
        cur = cur.get(part)?;
    }
    (!cur.is_null()).then_some(cur)
}

fn first<'a>(v: &'a Value, paths: &[&str]) -> Option<&'a Value> {
    paths.iter().find_map(|p| lookup(v, p))
}

fn as_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn text(v: &Value, paths: &[&str]) -> Option<String> {
    first(v, paths).and_then(as_text)
}

fn count(v: &Value, paths: &[&str]) -> Option<u64> {
    first(v, paths).and_then(|x| match x {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    })
}

fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn excerpt(v: &Value) -> String {
    let s = v.to_string();
    match s.char_indices().nth(200) {
        Some((i, _)) => format!("{}...", &s[..i]),
        None => s,
    }
}

/// Maps one platform-native payload to a record.
///
/// The latest activity timestamp before creation (imported histories) is
/// clamped to the creation time. Absent optional fields become unknown.
pub fn normalize_payload(payload: &Value, platform: Platform, term: &str) -> Result<RepoRecord> {
    let fm = field_map(platform);
    let fail = |message: &str| Error::Normalization {
        message: format!("{platform}: {message}"),
        excerpt: excerpt(payload),
    };

    let repo_id = text(payload, fm.id)
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| fail("missing repository id"))?;
    let created_raw = text(payload, fm.created).ok_or_else(|| fail("missing creation time"))?;
    let created_at =
        parse_timestamp(&created_raw).ok_or_else(|| fail(&format!("unparseable creation time {created_raw:?}")))?;
    let last_activity_at = fm
        .activity
        .iter()
        .filter_map(|p| lookup(payload, p).and_then(as_text))
        .filter_map(|s| parse_timestamp(&s))
        .max()
        .map_or(created_at, |t| t.max(created_at));

    let location = text(payload, fm.location)
        .map(|s| collapse_ws(&s))
        .filter(|s| !s.is_empty());
    let language = text(payload, fm.language).filter(|s| !s.trim().is_empty());

    Ok(RepoRecord {
        platform,
        repo_id: repo_id.trim().to_string(),
        name: text(payload, fm.name).map(|s| s.trim().to_string()).unwrap_or_default(),
        description: text(payload, fm.description)
            .map(|s| collapse_ws(&s))
            .unwrap_or_default(),
        created_at,
        last_activity_at,
        commit_count: count(payload, fm.commits),
        primary_language: language,
        owner_location_raw: location,
        matched_searchterms: [term.to_string()].into_iter().collect(),
        fork_count: count(payload, fm.forks),
        url: text(payload, fm.url).unwrap_or_default(),
    })
}

pub fn normalize(raw: &RawResult) -> Result<RepoRecord> {
    normalize_payload(&raw.payload, raw.target, &raw.term)
}

#[derive(Debug, Default)]
pub struct NormalizeReport {
    pub records: Vec<RepoRecord>,
    pub errors: Vec<Error>,
}

/// Normalizes raw results, folding repeated hits of the same repository
/// (found by several search terms) into one record with the union of terms.
/// Records appear in order of first sighting.
pub fn collect_records<'a>(raws: impl IntoIterator<Item = &'a RawResult>) -> NormalizeReport {
    let mut report = NormalizeReport::default();
    let mut index: HashMap<(Platform, String), usize> = HashMap::new();
    for raw in raws {
        match normalize(raw) {
            Ok(rec) => {
                let key = (rec.platform, rec.repo_id.clone());
                match index.get(&key) {
                    Some(&i) => {
                        let terms: BTreeSet<String> = rec.matched_searchterms;
                        report.records[i].matched_searchterms.extend(terms);
                    }
                    None => {
                        index.insert(key, report.records.len());
                        report.records.push(rec);
                    }
                }
            }
            Err(e) => {
                log::warn!("{e}");
                report.errors.push(e);
            }
        }
    }
    report
}
