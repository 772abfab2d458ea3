//! Description preprocessing: language filter, tokenization, stopword and
//! platform-name removal, stemming and n-gram construction.

mod stem;
mod vector;

use std::collections::HashSet;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schema::{Platform, RepoRecord};

pub use stem::stem;
pub use vector::{build_idf, cosine, tf_vector, tfidf, IdfTable, SparseVector};

/// Joins the words of an n-gram.
pub const NGRAM_JOINER: char = '_';

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Identity of a token document: the repository it was derived from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DocId {
    pub platform: Platform,
    pub repo_id: String,
}

/// A timestamped, preprocessed description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenDoc {
    pub doc_id: DocId,
    pub timestamp: DateTime<Utc>,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct StopWords {
    words: HashSet<String>,
}

impl StopWords {
    /// The English list shipped with the crate.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    /// One token per line; blank lines are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        StopWords { words }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Heuristic English filter.
///
/// Accepts descriptions with at least two words where either the stopword
/// fraction reaches `stopword_threshold` or at least 90% of the letters are ASCII.
pub fn is_english_multiword(description: &str, stopwords: &StopWords, stopword_threshold: f64) -> bool {
    let words: Vec<&str> = description.split_whitespace().collect();
    if words.len() < 2 {
        return false;
    }
    let stop = words
        .iter()
        .filter(|w| {
            let cleaned: String = w
                .chars()
                .filter(|c| c.is_alphanumeric() || *c == '\'')
                .collect::<String>()
                .to_lowercase();
            stopwords.contains(&cleaned)
        })
        .count();
    if stop as f64 / words.len() as f64 >= stopword_threshold {
        return true;
    }
    let (ascii, letters) = description
        .chars()
        .filter(|c| c.is_alphabetic())
        .fold((0usize, 0usize), |(a, n), c| (a + c.is_ascii() as usize, n + 1));
    letters > 0 && ascii as f64 / letters as f64 >= 0.9
}

fn is_url(word: &str) -> bool {
    word.starts_with("http://") || word.starts_with("https://") || word.starts_with("www.")
}

/// Replaces punctuation with spaces. Hyphens and underscores survive only
/// between two alphanumeric characters.
fn strip_punctuation(word: &str) -> String {
    let chars: Vec<char> = word.chars().collect();
    let mut out = String::with_capacity(word.len());
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            out.push(c);
        } else if (c == '-' || c == '_')
            && i > 0
            && i + 1 < chars.len()
            && chars[i - 1].is_alphanumeric()
            && chars[i + 1].is_alphanumeric()
        {
            out.push(c);
        } else {
            out.push(' ');
        }
    }
    out
}

/// Preprocessing settings shared by every document of a run.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    stopwords: StopWords,
    /// Platform names, each as a lowercase word sequence.
    platform_names: Vec<Vec<String>>,
    n_min: usize,
    n_max: usize,
}

impl Preprocessor {
    pub fn new<S: AsRef<str>>(
        platform_names: &[S],
        stopwords: StopWords,
        n_min: usize,
        n_max: usize,
    ) -> Result<Self> {
        if n_min < 1 || n_max < n_min {
            return Err(Error::Validation(format!(
                "n-gram range must satisfy 1 <= n_min <= n_max, got ({n_min}, {n_max})"
            )));
        }
        let platform_names = platform_names
            .iter()
            .map(|p| {
                p.as_ref()
                    .split_whitespace()
                    .map(str::to_lowercase)
                    .collect::<Vec<_>>()
            })
            .filter(|p| !p.is_empty())
            .collect();
        Ok(Preprocessor {
            stopwords,
            platform_names,
            n_min,
            n_max,
        })
    }

    pub fn stopwords(&self) -> &StopWords {
        &self.stopwords
    }

    fn is_platform_word(&self, word: &str) -> bool {
        self.platform_names
            .iter()
            .any(|p| p.len() == 1 && p[0] == word)
    }

    fn drop_platform_names(&self, words: Vec<String>) -> Vec<String> {
        let mut out = Vec::with_capacity(words.len());
        let mut i = 0;
        'outer: while i < words.len() {
            for name in &self.platform_names {
                let end = i + name.len();
                if end <= words.len() && words[i..end] == name[..] {
                    i = end;
                    continue 'outer;
                }
            }
            out.push(words[i].clone());
            i += 1;
        }
        out
    }

    /// Runs the full pipeline on one description. The result may be empty.
    pub fn preprocess(&self, description: &str) -> Vec<String> {
        let lowered = description.to_lowercase();
        let words: Vec<String> = lowered
            .split_whitespace()
            .filter(|w| !is_url(w))
            .flat_map(|w| {
                strip_punctuation(w)
                    .split_whitespace()
                    .map(str::to_string)
                    .collect::<Vec<_>>()
            })
            .collect();
        let words = self.drop_platform_names(words);
        // Stems are filtered again: a stem may coincide with a stopword or platform name.
        let stems: Vec<String> = words
            .into_iter()
            .filter(|w| !self.stopwords.contains(w))
            .map(|w| stem(&w))
            .filter(|w| !w.is_empty() && !self.stopwords.contains(w) && !self.is_platform_word(w))
            .collect();

        let mut tokens = Vec::new();
        for n in self.n_min..=self.n_max {
            if n > stems.len() {
                break;
            }
            for window in stems.windows(n) {
                tokens.push(window.join(&NGRAM_JOINER.to_string()));
            }
        }
        tokens
    }

    pub fn token_doc(&self, record: &RepoRecord) -> TokenDoc {
        TokenDoc {
            doc_id: DocId {
                platform: record.platform,
                repo_id: record.repo_id.clone(),
            },
            timestamp: record.created_at,
            tokens: self.preprocess(&record.description),
        }
    }
}

/// Convenience wrapper around [`Preprocessor::preprocess`].
pub fn preprocess<S: AsRef<str>>(
    description: &str,
    platform_names: &[S],
    stopwords: &StopWords,
    n_min: usize,
    n_max: usize,
) -> Result<Vec<String>> {
    Ok(Preprocessor::new(platform_names, stopwords.clone(), n_min, n_max)?.preprocess(description))
}
