//! Criterion benchmarks for `tfim-core`; run with `cargo bench -p tfim-bench`.
