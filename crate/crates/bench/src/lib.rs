//! Criterion benchmarks for hypersmml-core live in `benches/`.
