//! Shared fixtures for the engine benchmarks.

use fillwright_core::{gen_benchmark, BenchmarkParams, Layout};

/// Default-sized benchmark for `seed`.
pub fn small(seed: u64) -> Layout {
    gen_benchmark(&BenchmarkParams {
        seed,
        ..Default::default()
    })
    .expect("default params are valid")
}

/// Roughly 10,000 net shapes on a 250 µm die.
pub fn large(seed: u64) -> Layout {
    gen_benchmark(&BenchmarkParams {
        seed,
        die_edge: 250_000,
        num_layers: 4,
        num_nets: 7_200,
        wire_len_range: (2_000, 12_000),
        ..Default::default()
    })
    .expect("large params are valid")
}
