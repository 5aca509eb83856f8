//! Criterion benchmarks for `mimo-decay`; see `benches/decay.rs`.
