//! Criterion benchmarks for the numerical kernels live in `benches/`.
//! Run with `cargo bench -p landauer-bench`.
