//! Criterion benchmarks for the `opalg` kernels live under `benches/`.
