/// The `k` heaviest entries, sorted by weight descending then token ascending.
pub(crate) fn top_k<'a>(entries: impl Iterator<Item = (&'a str, f64)>, k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(&str, f64)> = entries.collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    all.truncate(k);
    all.into_iter().map(|(t, w)| (t.to_string(), w)).collect()
}
