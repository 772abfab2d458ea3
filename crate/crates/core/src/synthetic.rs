//! Seeded synthetic corpora with known topic labels, used by tests,
//! benchmarks and the bundled fixture corpus.
//!
//! Each generator owns a vocabulary disjoint from all others plus one anchor
//! word that appears exactly once in every document it emits.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::schema::{Platform, RepoRecord};
use crate::textprep::{DocId, TokenDoc};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    pub label: usize,
    pub anchor: String,
    pub vocab: Vec<String>,
}

impl Generator {
    /// Anchor plus vocabulary.
    pub fn all_words(&self) -> BTreeSet<&str> {
        std::iter::once(self.anchor.as_str())
            .chain(self.vocab.iter().map(String::as_str))
            .collect()
    }
}

/// `n` generators with synthetic tokens `g{label}w{i}` and anchor `g{label}anchor`.
pub fn token_generators(n: usize, vocab_size: usize) -> Vec<Generator> {
    (0..n)
        .map(|g| Generator {
            label: g,
            anchor: format!("g{g}anchor"),
            vocab: (0..vocab_size).map(|i| format!("g{g}w{i:02}")).collect(),
        })
        .collect()
}

const TOPIC_WORDS: [(&str, [&str; 15]); 3] = [
    (
        "weather",
        [
            "forecast", "temperature", "rain", "snow", "wind", "sunny", "cloud", "humid", "storm",
            "climate", "celsius", "alert", "radar", "pressure", "thunder",
        ],
    ),
    (
        "markov",
        [
            "chain", "text", "generate", "sentence", "corpus", "random", "model", "train", "language",
            "word", "predict", "grammar", "quote", "poem", "imitate",
        ],
    ),
    (
        "music",
        [
            "playlist", "song", "spotify", "album", "artist", "track", "lyric", "radio", "playback",
            "queue", "genre", "audio", "volume", "concert", "melody",
        ],
    ),
];

/// Three generators over plain English words that pass through
/// preprocessing unchanged.
pub fn word_generators() -> Vec<Generator> {
    TOPIC_WORDS
        .iter()
        .enumerate()
        .map(|(g, (anchor, words))| Generator {
            label: g,
            anchor: anchor.to_string(),
            vocab: words.iter().map(|w| w.to_string()).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDoc {
    pub doc: TokenDoc,
    pub label: usize,
}

/// Settings for [`interleaved_stream`].
#[derive(Debug, Clone)]
pub struct StreamSpec {
    pub docs_per_generator: usize,
    /// Non-anchor tokens per document, drawn with replacement.
    pub doc_len: usize,
    pub seed: u64,
    /// Generator `label` emits nothing at or after step `step`.
    pub stop: Option<(usize, usize)>,
    pub start: DateTime<Utc>,
}

impl Default for StreamSpec {
    fn default() -> Self {
        StreamSpec {
            docs_per_generator: 100,
            doc_len: 5,
            seed: 7,
            stop: None,
            start: Utc.with_ymd_and_hms(2016, 1, 1, 0, 0, 0).unwrap(),
        }
    }
}

/// Round-robin stream: step `i` happens at hour `i` and is emitted by
/// generator `i % n`, for `n * docs_per_generator` steps.
pub fn interleaved_stream(generators: &[Generator], spec: &StreamSpec) -> Vec<LabeledDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = generators.len();
    let mut out = Vec::new();
    for step in 0..n * spec.docs_per_generator {
        let g = &generators[step % n];
        let mut tokens = vec![g.anchor.clone()];
        for _ in 0..spec.doc_len {
            tokens.push(g.vocab.choose(&mut rng).expect("non-empty vocabulary").clone());
        }
        if matches!(spec.stop, Some((label, at)) if label == g.label && step >= at) {
            continue;
        }
        out.push(LabeledDoc {
            doc: TokenDoc {
                doc_id: DocId {
                    platform: Platform::Github,
                    repo_id: format!("{step:05}"),
                },
                timestamp: spec.start + Duration::hours(step as i64),
                tokens,
            },
            label: g.label,
        });
    }
    out
}

/// Repository records whose descriptions are short sentences built from the
/// generators' words, one per step as in [`interleaved_stream`].
///
/// Panics if `social_platforms` is empty.
pub fn synthetic_records(generators: &[Generator], spec: &StreamSpec, social_platforms: &[&str]) -> Vec<RepoRecord> {
    assert!(!social_platforms.is_empty(), "need at least one social platform");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let stream = interleaved_stream(generators, spec);
    let languages = ["Python", "JavaScript", "Java", "Go"];
    let targets = [Platform::Github, Platform::Github, Platform::Github, Platform::Gitlab];
    let locations = ["Berlin, Germany", "New York", "Atlantis", ""];
    // Platform j appears n - j times per cycle, so counts differ between platforms.
    let n = social_platforms.len();
    let skewed: Vec<usize> = (0..n).flat_map(|j| std::iter::repeat_n(j, n - j)).collect();
    stream
        .iter()
        .enumerate()
        .map(|(i, ld)| {
            let words: Vec<&str> = ld.doc.tokens.iter().map(String::as_str).collect();
            let social = social_platforms[skewed[i % skewed.len()]];
            let description = format!("a {social} bot that {}", words.join(" "));
            let lifetime_days = [0i64, 0, 3, 30, 200][i % 5] + (*[0i64, 1, 2].choose(&mut rng).unwrap());
            let created_at = ld.doc.timestamp;
            let location = locations[i % locations.len()];
            RepoRecord {
                platform: targets[i % targets.len()],
                repo_id: ld.doc.doc_id.repo_id.clone(),
                name: format!("{}-bot-{i}", generators[ld.label].anchor),
                description,
                created_at,
                last_activity_at: created_at + Duration::days(lifetime_days),
                commit_count: if i % 11 == 5 { None } else { Some(((i * 37) % 120) as u64) },
                primary_language: if i % 7 == 3 {
                    None
                } else {
                    Some(languages[i % languages.len()].to_string())
                },
                owner_location_raw: (!location.is_empty()).then(|| location.to_string()),
                matched_searchterms: [format!("{social} bot")].into_iter().collect(),
                fork_count: Some((i % 4) as u64),
                url: format!("https://example.invalid/{}", ld.doc.doc_id.repo_id),
            }
        })
        .collect()
}
