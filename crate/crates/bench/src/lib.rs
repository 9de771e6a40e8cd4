//! Shared fixtures for the criterion benchmarks.

use coopbatch_core::graph::generate_powerlaw;
use coopbatch_core::Graph;

/// Symmetrized power-law graph used across benchmarks.
pub fn bench_graph(num_vertices: usize) -> Graph {
    generate_powerlaw(num_vertices, 5.0, 0.6, 0xC0FFEE)
        .expect("valid generator parameters")
        .make_undirected()
}
