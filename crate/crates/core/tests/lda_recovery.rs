use std::collections::BTreeSet;

use repotrend::synthetic::{interleaved_stream, token_generators, StreamSpec};
use repotrend::topics::{fit_lda, fit_lda_with, LdaConfig};
use repotrend::TokenDoc;

fn corpus() -> (Vec<TokenDoc>, Vec<BTreeSet<String>>) {
    let gens = token_generators(3, 15);
    let docs = interleaved_stream(&gens, &StreamSpec { doc_len: 20, ..Default::default() }).into_iter().map(|d| d.doc).collect();
    let vocabs = gens.iter().map(|g| g.all_words().into_iter().map(String::from).collect()).collect();
    (docs, vocabs)
}

#[test]
fn topics_align_with_generators() {
    let (docs, vocabs) = corpus();
    let config = LdaConfig { iterations: 200, ..LdaConfig::with_topics(3, 42).unwrap() };
    let mut sweeps = 0;
    let model = fit_lda_with(&docs, &config, |_, m| {
        m.check_invariants().unwrap();
        sweeps += 1;
    })
    .unwrap();
    assert_eq!(sweeps, 200);
    let mut used = BTreeSet::new();
    for k in 0..3 {
        let top: Vec<String> = model.top_words(k, 5).unwrap().into_iter().map(|(w, _)| w).collect();
        let g = vocabs
            .iter()
            .position(|v| top.iter().all(|w| v.contains(w)))
            .unwrap_or_else(|| panic!("topic {k} mixes generators: {top:?}"));
        used.insert(g);
    }
    assert_eq!(used.len(), 3);
}

#[test]
fn perplexity_settles() {
    let (docs, _) = corpus();
    let config = LdaConfig { iterations: 100, ..LdaConfig::with_topics(3, 1).unwrap() };
    let mut trace = Vec::new();
    fit_lda_with(&docs, &config, |s, m| {
        if s % 10 == 0 {
            trace.push(m.perplexity(&docs));
        }
    })
    .unwrap();
    let first = trace[0];
    let last = *trace.last().unwrap();
    assert!(last < first, "{trace:?}");
    let tail = &trace[trace.len() / 2..];
    let spread = tail.iter().cloned().fold(f64::MIN, f64::max) - tail.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 0.05 * last, "{trace:?}");
}

#[test]
fn seed_pins_the_model() {
    let (docs, _) = corpus();
    let config = LdaConfig { iterations: 20, ..LdaConfig::with_topics(3, 9).unwrap() };
    let a = fit_lda(&docs, &config).unwrap();
    let b = fit_lda(&docs, &config).unwrap();
    assert_eq!(a.assignments(), b.assignments());
}

#[test]
fn recovery_holds_across_seeds() {
    let (docs, vocabs) = corpus();
    for seed in 0..10 {
        let config = LdaConfig { iterations: 200, ..LdaConfig::with_topics(3, seed).unwrap() };
        let model = fit_lda(&docs, &config).unwrap();
        for k in 0..3 {
            let top: Vec<String> = model.top_words(k, 5).unwrap().into_iter().map(|(w, _)| w).collect();
            assert!(vocabs.iter().any(|v| top.iter().all(|w| v.contains(w))), "seed {seed}: {top:?}");
        }
    }
}
