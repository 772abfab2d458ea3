use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::TokenDoc;
use crate::error::{Error, Result};

/// Token-weight map. Zero weights are never stored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVector(BTreeMap<String, f64>);

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `weight` to `token`, dropping the entry if it ends at zero.
    pub fn add(&mut self, token: &str, weight: f64) {
        if weight == 0.0 {
            return;
        }
        let entry = self.0.entry(token.to_string()).or_insert(0.0);
        *entry += weight;
        if *entry == 0.0 {
            self.0.remove(token);
        }
    }

    pub fn get(&self, token: &str) -> f64 {
        self.0.get(token).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.keys().map(String::as_str)
    }

    pub fn norm(&self) -> f64 {
        self.0.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Multiplies every weight by `factor` (> 0).
    pub fn scale(&mut self, factor: f64) {
        debug_assert!(factor > 0.0);
        for v in self.0.values_mut() {
            *v *= factor;
        }
    }

    /// Keeps only entries for which `keep` returns true.
    pub fn retain(&mut self, mut keep: impl FnMut(&str, f64) -> bool) {
        self.0.retain(|k, v| keep(k, *v));
    }

    /// Element-wise sum.
    pub fn merge_from(&mut self, other: &SparseVector) {
        for (k, v) in other.iter() {
            self.add(k, v);
        }
    }
}

impl FromIterator<(String, f64)> for SparseVector {
    fn from_iter<I: IntoIterator<Item = (String, f64)>>(iter: I) -> Self {
        let mut v = SparseVector::new();
        for (k, w) in iter {
            v.add(&k, w);
        }
        v
    }
}

/// Smoothed inverse document frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    doc_count: usize,
    df: BTreeMap<String, usize>,
    idf: BTreeMap<String, f64>,
}

fn smoothed_idf(n: usize, df: usize) -> f64 {
    ((1.0 + n as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl IdfTable {
    /// Builds a table from per-document token sets.
    pub fn from_token_sets<'a, I, S>(docs: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = &'a str>,
    {
        let mut doc_count = 0;
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            doc_count += 1;
            let unique: BTreeSet<&str> = doc.into_iter().collect();
            for t in unique {
                *df.entry(t.to_string()).or_insert(0) += 1;
            }
        }
        if doc_count == 0 {
            return Err(Error::Validation("cannot build idf from an empty corpus".into()));
        }
        let idf = df
            .iter()
            .map(|(t, &d)| (t.clone(), smoothed_idf(doc_count, d)))
            .collect();
        Ok(IdfTable { doc_count, df, idf })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn df(&self, token: &str) -> usize {
        self.df.get(token).copied().unwrap_or(0)
    }

    /// idf of `token`; unseen tokens get `ln(1 + N) + 1`.
    pub fn idf(&self, token: &str) -> f64 {
        self.idf
            .get(token)
            .copied()
            .unwrap_or_else(|| smoothed_idf(self.doc_count, 0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.idf.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

pub fn build_idf(corpus: &[TokenDoc]) -> Result<IdfTable> {
    IdfTable::from_token_sets(corpus.iter().map(|d| d.tokens.iter().map(String::as_str)))
}

/// Raw token counts.
pub fn tf_vector(doc: &TokenDoc) -> SparseVector {
    let mut v = SparseVector::new();
    for t in &doc.tokens {
        v.add(t, 1.0);
    }
    v
}

pub fn tfidf(v: &SparseVector, idf: &IdfTable) -> SparseVector {
    v.iter()
        .map(|(k, w)| (k.to_string(), w * idf.idf(k)))
        .collect()
}

/// Cosine similarity; 0 when either side has no weight.
pub fn cosine(v: &SparseVector, w: &SparseVector) -> f64 {
    let (small, large) = if v.len() <= w.len() { (v, w) } else { (w, v) };
    let dot: f64 = small.iter().map(|(k, x)| x * large.get(k)).sum();
    let nv: f64 = v.iter().map(|(_, x)| x * x).sum();
    let nw: f64 = w.iter().map(|(_, x)| x * x).sum();
    if nv == 0.0 || nw == 0.0 {
        return 0.0;
    }
    (dot / (nv * nw).sqrt()).clamp(0.0, 1.0)
}
