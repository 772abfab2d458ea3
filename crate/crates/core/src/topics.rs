//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::rank::top_k;
use crate::error::{Error, Result};
use crate::textprep::TokenDoc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub k: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-word prior.
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// `alpha = 50 / k`, `beta = 0.01`, 1000 sweeps.
    pub fn with_topics(k: usize, seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("topic count must be at least 1".into()));
        }
        Self::new(k, 50.0 / k as f64, 0.01, 1000, seed)
    }

    pub fn new(k: usize, alpha: f64, beta: f64, iterations: usize, seed: u64) -> Result<Self> {
        let cfg = LdaConfig {
            k,
            alpha,
            beta,
            iterations,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Validation("topic count must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Validation(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Validation(format!("beta must be positive, got {}", self.beta)));
        }
        if self.iterations == 0 {
            return Err(Error::Validation("at least one Gibbs sweep is required".into()));
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig::with_topics(15, 0).expect("defaults are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    k: usize,
    alpha: f64,
    beta: f64,
    vocab: Vec<String>,
    index: BTreeMap<String, usize>,
    /// Row-major K x V.
    n_kw: Vec<u32>,
    /// Row-major D x K.
    n_dk: Vec<u32>,
    n_k: Vec<u32>,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    rng_seed: u64,
}

/// JSON export of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelExport {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub vocab: Vec<String>,
    pub n_kw: Vec<Vec<u32>>,
}

impl TopicModel {
    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn topic_word_count(&self, k: usize, w: usize) -> u32 {
        self.n_kw[k * self.vocab.len() + w]
    }

    pub fn doc_topic_count(&self, d: usize, k: usize) -> u32 {
        self.n_dk[d * self.k + k]
    }

    pub fn topic_total(&self, k: usize) -> u32 {
        self.n_k[k]
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    fn phi(&self, k: usize, w: usize) -> f64 {
        let v = self.vocab.len() as f64;
        (self.n_kw[k * self.vocab.len() + w] as f64 + self.beta) / (self.n_k[k] as f64 + v * self.beta)
    }

    /// Smoothed word distribution of topic `k`.
    pub fn topic_word(&self, k: usize) -> Result<Vec<f64>> {
        self.check_topic(k)?;
        Ok((0..self.vocab.len()).map(|w| self.phi(k, w)).collect())
    }

    /// Smoothed topic distribution of fitted document `d`.
    pub fn doc_topic(&self, d: usize) -> Vec<f64> {
        let len = self.docs[d].len() as f64;
        let denom = len + self.k as f64 * self.alpha;
        (0..self.k)
            .map(|k| (self.n_dk[d * self.k + k] as f64 + self.alpha) / denom)
            .collect()
    }

    fn check_topic(&self, k: usize) -> Result<()> {
        if k >= self.k {
            return Err(Error::Validation(format!(
                "topic index {k} out of range for {} topics",
                self.k
            )));
        }
        Ok(())
    }

    /// Most probable words of topic `k`, ties broken by token.
    pub fn top_words(&self, k: usize, n: usize) -> Result<Vec<(String, f64)>> {
        self.check_topic(k)?;
        Ok(top_k(
            self.vocab
                .iter()
                .enumerate()
                .map(|(w, tok)| (tok.as_str(), self.phi(k, w))),
            n,
        ))
    }

    /// Verifies that all count tables agree with the assignments.
    pub fn check_invariants(&self) -> Result<()> {
        let v = self.vocab.len();
        for k in 0..self.k {
            let row: u64 = self.n_kw[k * v..(k + 1) * v].iter().map(|&c| c as u64).sum();
            if row != self.n_k[k] as u64 {
                return Err(Error::Validation(format!(
                    "topic {k}: word counts sum to {row}, total is {}",
                    self.n_k[k]
                )));
            }
        }
        for (d, doc) in self.docs.iter().enumerate() {
            let row: u64 = self.n_dk[d * self.k..(d + 1) * self.k].iter().map(|&c| c as u64).sum();
            if row != doc.len() as u64 {
                return Err(Error::Validation(format!(
                    "document {d}: topic counts sum to {row}, length is {}",
                    doc.len()
                )));
            }
        }
        let mut n_kw = vec![0u32; self.k * v];
        for (doc, zs) in self.docs.iter().zip(&self.z) {
            for (&w, &k) in doc.iter().zip(zs) {
                n_kw[k * v + w] += 1;
            }
        }
        if n_kw != self.n_kw {
            return Err(Error::Validation("topic-word counts disagree with assignments".into()));
        }
        Ok(())
    }

    /// Held-in perplexity `exp(-sum log p(w | d) / N)`.
    ///
    /// Documents are matched to fitted rows by position after dropping empty
    /// ones; documents beyond the fitted set use the prior mean `1/K` and
    /// out-of-vocabulary tokens are ignored.
    pub fn perplexity(&self, corpus: &[TokenDoc]) -> f64 {
        let mut log_lik = 0.0;
        let mut n = 0usize;
        for (d, doc) in corpus.iter().filter(|d| !d.tokens.is_empty()).enumerate() {
            let theta = if d < self.docs.len() {
                self.doc_topic(d)
            } else {
                vec![1.0 / self.k as f64; self.k]
            };
            for tok in &doc.tokens {
                let Some(&w) = self.index.get(tok) else { continue };
                let p: f64 = (0..self.k).map(|k| theta[k] * self.phi(k, w)).sum();
                log_lik += p.ln();
                n += 1;
            }
        }
        if n == 0 {
            return 1.0;
        }
        (-log_lik / n as f64).exp()
    }

    pub fn export(&self) -> ModelExport {
        let v = self.vocab.len();
        ModelExport {
            k: self.k,
            alpha: self.alpha,
            beta: self.beta,
            seed: self.rng_seed,
            vocab: self.vocab.clone(),
            n_kw: (0..self.k).map(|k| self.n_kw[k * v..(k + 1) * v].to_vec()).collect(),
        }
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng, probs: &mut [f64]) {
        let v = self.vocab.len();
        let vbeta = v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.z[d][i];
                self.n_dk[d * self.k + old] -= 1;
                self.n_kw[old * v + w] -= 1;
                self.n_k[old] -= 1;

                let mut total = 0.0;
                for (k, p) in probs.iter_mut().enumerate() {
                    total += (self.n_dk[d * self.k + k] as f64 + self.alpha)
                        * (self.n_kw[k * v + w] as f64 + self.beta)
                        / (self.n_k[k] as f64 + vbeta);
                    *p = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = probs.iter().position(|&c| u < c).unwrap_or(self.k - 1);

                self.z[d][i] = new;
                self.n_dk[d * self.k + new] += 1;
                self.n_kw[new * v + w] += 1;
                self.n_k[new] += 1;
            }
        }
    }
}

/// Fits a model; see [`fit_lda_with`].
pub fn fit_lda(corpus: &[TokenDoc], config: &LdaConfig) -> Result<TopicModel> {
    fit_lda_with(corpus, config, |_, _| {})
}

/// Fits a model, calling `on_sweep(sweep, model)` after every Gibbs sweep.
///
/// Empty documents are dropped. The result depends only on the corpus order
/// and `config.seed`.
pub fn fit_lda_with(
    corpus: &[TokenDoc],
    config: &LdaConfig,
    mut on_sweep: impl FnMut(usize, &TopicModel),
) -> Result<TopicModel> {
    config.validate()?;
    let docs: Vec<&TokenDoc> = corpus.iter().filter(|d| !d.tokens.is_empty()).collect();
    if docs.is_empty() {
        return Err(Error::Validation("LDA needs at least one non-empty document".into()));
    }
    let total_tokens: usize = docs.iter().map(|d| d.tokens.len()).sum();
    if config.k > total_tokens {
        return Err(Error::Validation(format!(
            "{} topics exceed the {total_tokens} tokens in the corpus",
            config.k
        )));
    }

    let mut index = BTreeMap::new();
    for d in &docs {
        for t in &d.tokens {
            index.entry(t.clone()).or_insert(0usize);
        }
    }
    for (i, slot) in index.values_mut().enumerate() {
        *slot = i;
    }
    let vocab: Vec<String> = index.keys().cloned().collect();
    let word_ids: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.tokens.iter().map(|t| index[t]).collect())
        .collect();

    let k = config.k;
    let v = vocab.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = TopicModel {
        k,
        alpha: config.alpha,
        beta: config.beta,
        vocab,
        index,
        n_kw: vec![0; k * v],
        n_dk: vec![0; word_ids.len() * k],
        n_k: vec![0; k],
        z: Vec::with_capacity(word_ids.len()),
        docs: word_ids,
        rng_seed: config.seed,
    };
    for d in 0..model.docs.len() {
        let zs: Vec<usize> = model.docs[d].iter().map(|_| rng.gen_range(0..k)).collect();
        for (&w, &topic) in model.docs[d].iter().zip(&zs) {
            model.n_dk[d * k + topic] += 1;
            model.n_kw[topic * v + w] += 1;
            model.n_k[topic] += 1;
        }
        model.z.push(zs);
    }

    let mut probs = vec![0.0; k];
    for sweep in 0..config.iterations {
        model.sweep(&mut rng, &mut probs);
        debug_assert!(model.check_invariants().is_ok());
        on_sweep(sweep, &model);
    }
    Ok(model)
}
