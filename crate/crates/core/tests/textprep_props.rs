use proptest::prelude::*;
use repotrend::textprep::{cosine, preprocess, stem, IdfTable, Preprocessor, SparseVector, StopWords};

fn sparse() -> impl Strategy<Value = SparseVector> {
    prop::collection::btree_map(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 0.01f64..10.0, 0..5)
        .prop_map(|m| m.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

/// Dense reference cosine over the union of keys.
fn cosine_oracle(v: &SparseVector, w: &SparseVector) -> f64 {
    let keys: std::collections::BTreeSet<&str> = v.keys().chain(w.keys()).collect();
    let (mut dot, mut a, mut b) = (0.0, 0.0, 0.0);
    for k in keys {
        dot += v.get(k) * w.get(k);
        a += v.get(k) * v.get(k);
        b += w.get(k) * w.get(k);
    }
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        dot / (a.sqrt() * b.sqrt())
    }
}

fn words() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec![
            "the", "Telegram", "bot", "running", "runs", "a", "slack", "Slack", "weather", "forecast", "of",
            "http://x.io/a", "--", "co-op", "snake_case", "it's", "Discord!", "ALSO", "stories", "quickly",
        ]),
        0..15,
    )
    .prop_map(|w| w.join(" "))
}

const PLATFORMS: [&str; 3] = ["telegram", "slack", "discord"];

proptest! {
    #[test]
    fn cosine_is_symmetric_bounded_and_scale_invariant(v in sparse(), w in sparse(), s in 0.1f64..50.0) {
        let c = cosine(&v, &w);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert_eq!(c, cosine(&w, &v));
        prop_assert!((c - cosine_oracle(&v, &w)).abs() < 1e-12);
        let mut scaled = v.clone();
        scaled.scale(s);
        prop_assert!((cosine(&scaled, &w) - c).abs() < 1e-12);
        if !v.is_empty() {
            prop_assert!((cosine(&v, &v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn idf_decreases_with_document_frequency(docs in prop::collection::vec(prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d"]), 0..4), 1..20)) {
        let idf = IdfTable::from_token_sets(docs.iter().map(|d| d.iter().copied())).unwrap();
        let tokens = ["a", "b", "c", "d", "never"];
        for x in tokens {
            for y in tokens {
                if idf.df(x) < idf.df(y) {
                    prop_assert!(idf.idf(x) > idf.idf(y));
                }
            }
            prop_assert!(idf.idf(x) >= 1.0);
        }
    }

    #[test]
    fn preprocessed_tokens_avoid_stopwords_and_platform_names(text in words()) {
        let stop = StopWords::english();
        let tokens = preprocess(&text, &PLATFORMS, &stop, 1, 2).unwrap();
        prop_assert_eq!(&tokens, &preprocess(&text, &PLATFORMS, &stop, 1, 2).unwrap());
        for t in &tokens {
            for part in t.split('_') {
                prop_assert!(!stop.contains(part), "{part} in {tokens:?}");
                prop_assert!(!PLATFORMS.contains(&part));
                prop_assert!(!part.is_empty());
                prop_assert_eq!(part.to_lowercase(), part);
            }
        }
    }

    #[test]
    fn stemming_is_idempotent(w in "[a-z]{1,12}") {
        let once = stem(&w);
        prop_assert_eq!(stem(&once), once);
    }
}

#[test]
fn cosine_of_half_overlap_is_inverse_root_two() {
    let v: SparseVector = [("a".to_string(), 1.0), ("b".to_string(), 1.0)].into_iter().collect();
    let w: SparseVector = [("a".to_string(), 1.0)].into_iter().collect();
    assert!((cosine(&v, &w) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    assert!((cosine_oracle(&v, &w) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
}

#[test]
fn ngram_tokens_follow_unigrams() {
    let p = Preprocessor::new(&PLATFORMS, StopWords::english(), 1, 2).unwrap();
    assert_eq!(
        p.preprocess("A Telegram bot for weather forecasts"),
        vec!["bot", "weather", "forecast", "bot_weather", "weather_forecast"]
    );
}
