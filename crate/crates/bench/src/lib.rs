//! Benchmarks live in `benches/`; run them with `cargo bench -p ridehail-bench`.
