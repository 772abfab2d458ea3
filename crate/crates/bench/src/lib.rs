//! Criterion benchmarks for the hot paths of `repotrend`; see `benches/`.
