//! Criterion benchmarks for `promptcast-core`; run with `cargo bench -p promptcast-bench`.
