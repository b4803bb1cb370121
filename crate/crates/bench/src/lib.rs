//! Benchmark-only crate; see the `benches/` directory. The library target
//! exists so the package participates in ordinary workspace builds.
