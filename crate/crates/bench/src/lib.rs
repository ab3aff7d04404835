//! Criterion benchmarks for the search engine live in `benches/`.
