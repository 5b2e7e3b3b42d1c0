//! Criterion benchmarks for the sampdisc kernels; see `benches/`.
