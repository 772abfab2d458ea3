//! A small Porter-style suffix stripper.
//!
//! Rules are applied repeatedly until none fires, so `stem(stem(w)) == stem(w)`
//! for every input. Only pure `a-z` words are touched.

fn is_vowel(word: &[u8], i: usize) -> bool {
    match word[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel(word, i - 1),
        _ => false,
    }
}

/// Number of vowel-consonant sequences in `word`.
fn measure(word: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..word.len() {
        let v = is_vowel(word, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

fn undouble(mut stem: String) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !is_vowel(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z')
    {
        stem.pop();
    }
    stem
}

fn step(word: &str) -> Option<String> {
    if let Some(stem) = word.strip_suffix("sses") {
        return Some(format!("{stem}ss"));
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.len() >= 2 {
            return Some(format!("{stem}y"));
        }
    }
    if let Some(stem) = word.strip_suffix('s') {
        if stem.len() >= 3 && !stem.ends_with(['s', 'u', 'i']) {
            return Some(stem.to_string());
        }
    }
    for suffix in ["ing", "ed"] {
        if let Some(stem) = word.strip_suffix(suffix) {
            if stem.len() >= 3 && measure(stem.as_bytes()) >= 1 {
                return Some(undouble(stem.to_string()));
            }
        }
    }
    // Agent nouns: only after a doubled consonant (runner) or on longer stems (computer).
    if let Some(stem) = word.strip_suffix("er") {
        let b = stem.as_bytes();
        let doubled = b.len() >= 3 && b[b.len() - 1] == b[b.len() - 2] && !is_vowel(b, b.len() - 1);
        if stem.len() >= 3 && (doubled || measure(b) >= 2) {
            return Some(undouble(stem.to_string()));
        }
    }
    if let Some(stem) = word.strip_suffix("ly") {
        if stem.len() >= 3 && measure(stem.as_bytes()) >= 1 {
            return Some(stem.to_string());
        }
    }
    None
}

/// Reduces an inflected lowercase word to its stem.
pub fn stem(word: &str) -> String {
    if word.is_empty() || !word.bytes().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut current = word.to_string();
    while let Some(next) = step(&current) {
        current = next;
    }
    current
}
