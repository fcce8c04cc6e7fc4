//! Criterion benchmarks for the hot paths of a bootstrap replicate; see `benches/`.
