use std::collections::BTreeSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use proptest::prelude::*;
use repotrend::schema::{append_records, encode_corpus, lifespan, read_corpus, timeliness};
use repotrend::{CorpusHandle, Error, Platform, RepoRecord};

fn at(secs: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(1_400_000_000 + secs, 0).unwrap()
}

fn record(id: &str, created: i64, span: i64) -> RepoRecord {
    RepoRecord {
        platform: Platform::Gitlab,
        repo_id: id.to_string(),
        name: format!("repo-{id}"),
        description: "A Slack bot".to_string(),
        created_at: at(created),
        last_activity_at: at(created + span),
        commit_count: Some(3),
        primary_language: None,
        owner_location_raw: Some("Paris".to_string()),
        matched_searchterms: BTreeSet::from(["Slack bot".to_string()]),
        fork_count: None,
        url: format!("https://gitlab.com/x/{id}"),
    }
}

fn arb_record() -> impl Strategy<Value = RepoRecord> {
    (
        prop::sample::select(Platform::ALL.to_vec()),
        "[a-z0-9]{1,8}",
        ".{0,20}",
        ".{0,40}",
        0i64..200_000_000,
        0i64..100_000_000,
        prop::option::of(0u64..100_000),
        prop::option::of("[A-Za-z+#]{1,10}"),
        prop::option::of(".{0,20}"),
        prop::collection::btree_set("[A-Z][a-z]{2,8} bot", 0..3),
        prop::option::of(0u64..1000),
    )
        .prop_map(|(platform, repo_id, name, description, c, span, commits, lang, loc, terms, forks)| RepoRecord {
            platform,
            url: format!("https://example.org/{repo_id}"),
            repo_id,
            name,
            description,
            created_at: at(c),
            last_activity_at: at(c + span),
            commit_count: commits,
            primary_language: lang,
            owner_location_raw: loc,
            matched_searchterms: terms,
            fork_count: forks,
        })
}

proptest! {
    #[test]
    fn corpus_round_trips(records in prop::collection::vec(arb_record(), 0..12)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        std::fs::write(&path, encode_corpus(&records)).unwrap();
        let back = read_corpus(&path).unwrap();
        prop_assert!(back.skipped.is_empty());
        prop_assert_eq!(back.records, records);
    }

    #[test]
    fn lifespan_plus_timeliness_spans_creation_to_now(r in arb_record(), extra in 0i64..100_000_000) {
        let now = r.last_activity_at + Duration::seconds(extra);
        let total = (now - r.created_at).num_days();
        let sum = lifespan(&r).unwrap() + timeliness(&r, now).unwrap();
        prop_assert!(sum == total || sum + 1 == total, "{sum} vs {total}");
    }
}

#[test]
fn malformed_line_is_skipped_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let good = encode_corpus(&[record("1", 0, 10), record("2", 0, 10), record("3", 0, 10)]);
    let mut lines: Vec<&str> = good.lines().collect();
    lines.insert(3, "{\"platform\": \"gitlab\", \"repo_id\": ");
    std::fs::write(&path, lines.join("\n")).unwrap();
    let back = read_corpus(&path).unwrap();
    assert_eq!(back.records.len(), 3);
    assert_eq!(back.skipped.len(), 1);
    assert_eq!(back.skipped[0].line, 4);
}

#[test]
fn schema_version_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    std::fs::write(&path, "{\"schema_version\":99}\n").unwrap();
    match read_corpus(&path) {
        Err(Error::Format { path: p, message }) => {
            assert_eq!(p, path);
            assert!(message.contains("99"), "{message}");
        }
        other => panic!("expected a format error, got {other:?}"),
    }
}

#[test]
fn append_supersedes_in_place() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let handle = CorpusHandle::open(&path).unwrap();
    assert_eq!(handle.record_count, 0);
    let handle = append_records(&handle, &[record("1", 0, 10), record("2", 0, 10)]).unwrap();
    let mut newer = record("1", 0, 90_000);
    newer.commit_count = Some(8);
    let handle = append_records(&handle, &[newer.clone(), record("3", 5, 5)]).unwrap();
    assert_eq!(handle.record_count, 3);
    let back = read_corpus(&path).unwrap().records;
    let ids: Vec<&str> = back.iter().map(|r| r.repo_id.as_str()).collect();
    assert_eq!(ids, vec!["1", "2", "3"]);
    assert_eq!(back[0], newer);
    assert_eq!(CorpusHandle::open(&path).unwrap().record_count, 3);
}

#[test]
fn inconsistent_record_has_no_lifespan() {
    let mut r = record("1", 100, 0);
    r.last_activity_at = at(0);
    assert!(matches!(lifespan(&r), Err(Error::Validation(_))));
}
