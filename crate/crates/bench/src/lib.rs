//! Benchmark-only package; see `benches/solvers.rs`.
