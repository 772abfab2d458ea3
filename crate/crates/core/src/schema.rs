//! The normalized repository record and the line-delimited corpus store.
//!
//! A corpus file is UTF-8 text: a header line `{"schema_version": 1}` followed by
//! one JSON-encoded [`RepoRecord`] per line. Unknown numeric fields are stored as
//! `null`, never `0`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Collaboration platform hosting a repository.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Github,
    Gitlab,
    Bitbucket,
    Sourceforge,
    Launchpad,
}

impl Platform {
    pub const ALL: [Platform; 5] = [
        Platform::Github,
        Platform::Gitlab,
        Platform::Bitbucket,
        Platform::Sourceforge,
        Platform::Launchpad,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Github => "github",
            Platform::Gitlab => "gitlab",
            Platform::Bitbucket => "bitbucket",
            Platform::Sourceforge => "sourceforge",
            Platform::Launchpad => "launchpad",
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Platform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Platform::ALL
            .into_iter()
            .find(|p| p.as_str() == lower)
            .ok_or_else(|| Error::Config(format!("unknown collaboration platform {s:?}")))
    }
}

/// One repository's metadata in the common intermediate schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepoRecord {
    pub platform: Platform,
    pub repo_id: String,
    pub name: String,
    pub description: String,
    pub created_at: DateTime<Utc>,
    pub last_activity_at: DateTime<Utc>,
    pub commit_count: Option<u64>,
    pub primary_language: Option<String>,
    pub owner_location_raw: Option<String>,
    pub matched_searchterms: BTreeSet<String>,
    pub fork_count: Option<u64>,
    pub url: String,
}

impl RepoRecord {
    /// Corpus-wide identity of the record.
    pub fn key(&self) -> (Platform, &str) {
        (self.platform, self.repo_id.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        if self.last_activity_at < self.created_at {
            return Err(Error::Validation(format!(
                "record {}/{}: last activity {} precedes creation {}",
                self.platform, self.repo_id, self.last_activity_at, self.created_at
            )));
        }
        Ok(())
    }
}

fn whole_days(from: DateTime<Utc>, to: DateTime<Utc>) -> i64 {
    // num_days truncates toward zero, which is the floor for non-negative spans.
    (to - from).num_days()
}

/// Days between creation and last activity, floored.
pub fn lifespan(r: &RepoRecord) -> Result<i64> {
    r.validate()?;
    Ok(whole_days(r.created_at, r.last_activity_at))
}

/// Days between the last activity and `now`, floored. Low means recently active.
pub fn timeliness(r: &RepoRecord, now: DateTime<Utc>) -> Result<i64> {
    if now < r.last_activity_at {
        return Err(Error::Validation(format!(
            "record {}/{}: reference time {} precedes last activity {}",
            r.platform, r.repo_id, now, r.last_activity_at
        )));
    }
    Ok(whole_days(r.last_activity_at, now))
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
}

/// A line that could not be read as a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusContents {
    pub records: Vec<RepoRecord>,
    pub skipped: Vec<SkippedLine>,
}

/// Reads a corpus file. Malformed lines are skipped and reported with their
/// 1-based line number.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<CorpusContents> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = CorpusContents::default();
    let mut saw_header = false;

    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !saw_header {
            let header: Header = serde_json::from_str(trimmed).map_err(|e| Error::Format {
                path: path.to_path_buf(),
                message: format!("line {lineno}: expected schema header: {e}"),
            })?;
            if header.schema_version != SCHEMA_VERSION {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    message: format!(
                        "schema version {} is not supported (expected {SCHEMA_VERSION})",
                        header.schema_version
                    ),
                });
            }
            saw_header = true;
            continue;
        }
        let parsed = serde_json::from_str::<RepoRecord>(trimmed)
            .map_err(|e| e.to_string())
            .and_then(|r| r.validate().map(|_| r).map_err(|e| e.to_string()));
        match parsed {
            Ok(r) => out.records.push(r),
            Err(message) => {
                log::warn!("{}:{lineno}: skipping malformed record: {message}", path.display());
                out.skipped.push(SkippedLine {
                    line: lineno,
                    message,
                });
            }
        }
    }
    Ok(out)
}

/// Location and size of a corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusHandle {
    pub path: PathBuf,
    pub record_count: usize,
}

impl CorpusHandle {
    /// Opens a corpus; a missing file is an empty corpus.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let record_count = if path.exists() {
            read_corpus(&path)?.records.len()
        } else {
            0
        };
        Ok(CorpusHandle { path, record_count })
    }
}

/// Appends records, enforcing `(platform, repo_id)` uniqueness with
/// last-write-wins. The file is rewritten through a temporary sibling and
/// renamed into place, so a call is either fully visible or not at all.
///
/// Callers must not append to the same corpus concurrently.
pub fn append_records(handle: &CorpusHandle, records: &[RepoRecord]) -> Result<CorpusHandle> {
    for r in records {
        r.validate()?;
    }
    let mut existing = if handle.path.exists() {
        read_corpus(&handle.path)?.records
    } else {
        Vec::new()
    };

    let mut index: HashMap<(Platform, String), usize> = existing
        .iter()
        .enumerate()
        .map(|(i, r)| ((r.platform, r.repo_id.clone()), i))
        .collect();
    for r in records {
        let key = (r.platform, r.repo_id.clone());
        match index.get(&key) {
            Some(&i) => {
                log::info!("superseding {}/{} with newer record", r.platform, r.repo_id);
                existing[i] = r.clone();
            }
            None => {
                index.insert(key, existing.len());
                existing.push(r.clone());
            }
        }
    }

    write_corpus(&handle.path, &existing)?;
    Ok(CorpusHandle {
        path: handle.path.clone(),
        record_count: existing.len(),
    })
}

/// Serializes a full corpus (header plus records) to a string.
pub fn encode_corpus(records: &[RepoRecord]) -> String {
    let mut buf = serde_json::to_string(&Header {
        schema_version: SCHEMA_VERSION,
    })
    .expect("header serializes");
    buf.push('\n');
    for r in records {
        buf.push_str(&serde_json::to_string(r).expect("record serializes"));
        buf.push('\n');
    }
    buf
}

fn write_corpus(path: &Path, records: &[RepoRecord]) -> Result<()> {
    crate::io::write_atomic(path, encode_corpus(records).as_bytes())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use chrono::TimeZone;

    pub(crate) fn ts(s: &str) -> DateTime<Utc> {
        if s.len() == 10 {
            let d = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
            Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).unwrap())
        } else {
            DateTime::parse_from_rfc3339(s).unwrap().with_timezone(&Utc)
        }
    }

    pub(crate) fn record(id: &str, created: &str, last: &str) -> RepoRecord {
        RepoRecord {
            platform: Platform::Github,
            repo_id: id.to_string(),
            name: format!("repo-{id}"),
            description: "a simple bot".to_string(),
            created_at: ts(created),
            last_activity_at: ts(last),
            commit_count: Some(3),
            primary_language: Some("Python".into()),
            owner_location_raw: None,
            matched_searchterms: ["Telegram bot".to_string()].into_iter().collect(),
            fork_count: None,
            url: format!("https://example.invalid/{id}"),
        }
    }

    #[test]
    fn lifespan_examples() {
        let r = record("1", "2015-06-01T10:00:00Z", "2015-06-01T10:00:00Z");
        assert_eq!(lifespan(&r).unwrap(), 0);
        let r = record("1", "2015-06-01T00:00:00Z", "2015-06-11T00:00:00Z");
        assert_eq!(lifespan(&r).unwrap(), 10);
        let r = record("1", "2015-06-01T00:00:00Z", "2015-06-01T23:59:59Z");
        assert_eq!(lifespan(&r).unwrap(), 0);
        let r = record("bad", "2016-01-02", "2016-01-01");
        let err = lifespan(&r).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("bad")));
    }

    #[test]
    fn timeliness_examples() {
        let r = record("1", "2018-01-01", "2018-10-01");
        assert_eq!(timeliness(&r, ts("2018-10-01")).unwrap(), 0);
        let r = record("1", "2018-01-01", "2018-09-01T00:00:00Z");
        assert_eq!(timeliness(&r, ts("2018-10-01T00:00:00Z")).unwrap(), 30);
        let r = record("1", "2018-01-01", "2018-10-02");
        assert!(timeliness(&r, ts("2018-10-01")).is_err());
    }

    #[test]
    fn platform_parses_case_insensitively() {
        assert_eq!("GitHub".parse::<Platform>().unwrap(), Platform::Github);
        assert!("myspace".parse::<Platform>().is_err());
    }

    #[test]
    fn unknown_numbers_serialize_as_null() {
        let mut r = record("1", "2018-01-01", "2018-01-02");
        r.commit_count = None;
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"commit_count\":null"));
        assert!(json.contains("\"created_at\":\"2018-01-01T00:00:00Z\""));
        r.commit_count = Some(0);
        assert!(serde_json::to_string(&r).unwrap().contains("\"commit_count\":0"));
    }
}
