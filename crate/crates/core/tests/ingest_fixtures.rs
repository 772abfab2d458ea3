use std::cell::Cell;
use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use repotrend::analytics::country_counts;
use repotrend::ingest::{
    build_queries, collect_records, geocode, Crawler, FixtureAdapter, GeoCache, GeoPoint, Gazetteer, Geocoder,
    HttpGeocoder, RateLimit, RetryPolicy,
};
use repotrend::{Error, Platform};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn two_page_fixture_normalizes_by_hand() {
    let adapter = FixtureAdapter::from_file(fixture("github_two_pages.json")).unwrap();
    let mut crawler = Crawler::new(adapter, RetryPolicy::default()).unwrap();
    let queries = build_queries(&["Telegram", "Slack"], &[Platform::Github]).unwrap();
    let mut raws = Vec::new();
    for q in &queries {
        let pages: Vec<_> = crawler
            .search(q)
            .unwrap()
            .collect::<Result<_, _>>()
            .unwrap();
        if q.term == "Telegram bot" {
            assert_eq!(pages.iter().map(|p| p.page).collect::<Vec<_>>(), vec![1, 2]);
        }
        raws.extend(pages.into_iter().flat_map(|p| p.results));
    }
    assert_eq!(raws.len(), 4);
    let report = collect_records(&raws);
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert_eq!(report.records.len(), 3);

    let weather = report.records.iter().find(|r| r.repo_id == "101").unwrap();
    assert_eq!(weather.platform, Platform::Github);
    assert_eq!(weather.name, "weatherbot");
    assert_eq!(weather.description, "A Telegram bot that posts the weather forecast");
    assert_eq!(weather.created_at.to_rfc3339(), "2016-03-01T10:00:00+00:00");
    assert_eq!(weather.last_activity_at.to_rfc3339(), "2017-02-01T12:30:00+00:00");
    assert_eq!(weather.commit_count, Some(57));
    assert_eq!(weather.fork_count, Some(4));
    assert_eq!(weather.primary_language.as_deref(), Some("Python"));
    assert_eq!(weather.owner_location_raw.as_deref(), Some("Berlin, Germany"));
    assert_eq!(
        weather.matched_searchterms,
        BTreeSet::from(["Slack bot".to_string(), "Telegram bot".to_string()])
    );

    let quiz = report.records.iter().find(|r| r.repo_id == "102").unwrap();
    assert_eq!(quiz.commit_count, None);
    assert_eq!(quiz.primary_language, None);
}

#[test]
fn rate_limit_spaces_requests() {
    let adapter = FixtureAdapter::from_file(fixture("github_two_pages.json"))
        .unwrap()
        .with_rate_limit(RateLimit::per_second(1));
    let mut crawler = Crawler::new(adapter, RetryPolicy::default()).unwrap();
    let queries = build_queries(&["Telegram", "Slack"], &[Platform::Github]).unwrap();
    let start = Instant::now();
    for q in &queries {
        for page in crawler.search(q).unwrap() {
            page.unwrap();
        }
    }
    let adapter = crawler.into_adapter();
    // Three requests at one per second: the third waits for two windows.
    assert_eq!(adapter.request_log().len(), 3);
    assert!(start.elapsed() >= Duration::from_millis(1990), "{:?}", start.elapsed());
    let log = adapter.request_log();
    assert!(log[2].2 - log[0].2 >= Duration::from_millis(1990));
}

#[test]
fn expired_credentials_stop_the_query() {
    let mut adapter = FixtureAdapter::from_file(fixture("expired_token.json")).unwrap();
    let q = &build_queries(&["Telegram"], &[Platform::Gitlab]).unwrap()[0];
    let results: Vec<_> = Crawler::new(&mut adapter, RetryPolicy::default())
        .unwrap()
        .search(q)
        .unwrap()
        .collect();
    assert_eq!(results.len(), 1);
    match &results[0] {
        Err(Error::Credential { platform, message }) => {
            assert_eq!(platform, "gitlab");
            assert!(message.contains("expired"));
        }
        other => panic!("expected a credential error, got {other:?}"),
    }
    assert_eq!(adapter.request_log().len(), 1);
}

struct Counting {
    inner: Gazetteer,
    calls: Cell<usize>,
}

impl Geocoder for Counting {
    fn lookup(&self, location: &str) -> repotrend::Result<Option<GeoPoint>> {
        self.calls.set(self.calls.get() + 1);
        self.inner.lookup(location)
    }
}

#[test]
fn gazetteer_resolves_and_caches() {
    let client = Counting {
        inner: Gazetteer::from_file(fixture("gazetteer.csv")).unwrap(),
        calls: Cell::new(0),
    };
    let cache = GeoCache::new();
    let berlin = geocode("Berlin, Germany", &client, &cache).unwrap().unwrap();
    assert_eq!(berlin.country_code.as_deref(), Some("DE"));
    assert!((berlin.latitude - 52.52).abs() < 1e-9);

    let inputs = [
        "Berlin, Germany", "Munich", "Berlin, Germany", "Paris, France", "Atlantis", "Tokyo", "Atlantis",
        "New York", "new york", "San Francisco, CA",
    ];
    let points: Vec<_> = inputs.iter().map(|s| geocode(s, &client, &cache).unwrap()).collect();
    let distinct: BTreeSet<&str> = inputs.iter().copied().collect();
    assert_eq!(client.calls.get(), distinct.len());
    assert_eq!(cache.unresolved_count(), 1);

    let counts = country_counts(&points);
    let expected = [("DE", 3), ("FR", 1), ("JP", 1), ("US", 3)];
    assert_eq!(counts.counts.len(), expected.len());
    for (cc, n) in expected {
        assert_eq!(counts.counts[cc], n, "{cc}");
    }
    assert_eq!(counts.unknown, 2);
    assert!(matches!(geocode("  ", &client, &cache), Err(Error::Validation(_))));
}

/// Serves `responses` in order, one per connection, and records request lines.
fn serve(responses: Vec<&'static str>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/geocode", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut seen = Vec::new();
        for body in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            seen.push(line.trim().to_string());
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                if h.trim().is_empty() {
                    break;
                }
            }
            let (status, body) = body.split_once('|').unwrap();
            write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        seen
    });
    (url, handle)
}

#[test]
fn http_geocoder_round_trip() {
    let (url, server) = serve(vec![
        r#"200 OK|{"lat": 48.8566, "lon": 2.3522, "country_code": "fr"}"#,
        "404 Not Found|{}",
        "503 Service Unavailable|{}",
        r#"200 OK|{"lat": null, "lon": null}"#,
    ]);
    let geo = HttpGeocoder::new(url).with_retries(1, Duration::from_millis(10));
    let paris = geo.lookup("Paris, France").unwrap().unwrap();
    assert_eq!(paris.country_code.as_deref(), Some("FR"));
    assert_eq!(geo.lookup("Atlantis").unwrap(), None);
    assert_eq!(geo.lookup("Nowhere").unwrap(), None);
    let seen = server.join().unwrap();
    assert_eq!(seen.len(), 4);
    assert!(seen[0].starts_with("GET /geocode?q=Paris"), "{}", seen[0]);
}

#[test]
fn http_geocoder_reports_exhausted_retries() {
    let (url, server) = serve(vec!["500 Internal Server Error|{}", "500 Internal Server Error|{}"]);
    let geo = HttpGeocoder::new(url).with_retries(1, Duration::from_millis(10));
    match geo.lookup("Berlin") {
        Err(Error::Lookup { input, message }) => {
            assert_eq!(input, "Berlin");
            assert!(message.contains("500"), "{message}");
        }
        other => panic!("expected a lookup error, got {other:?}"),
    }
    server.join().unwrap();
}
