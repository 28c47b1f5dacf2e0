//! Criterion benchmarks for saddlebound live in `benches/`.
