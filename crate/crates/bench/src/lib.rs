//! Benchmarks for the reference oracles live in `benches/`.
