//! Criterion benchmarks for the detector live in `benches/`.
