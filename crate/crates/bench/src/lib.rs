//! Criterion benchmarks for the fairsched crate; see `benches/`.
