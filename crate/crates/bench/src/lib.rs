//! Criterion benchmarks for the dense kernels in `conespectra-core`; see `benches/`.
