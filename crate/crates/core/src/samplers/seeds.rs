use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dedup_preserving_order;
use crate::graph::{Graph, VertexId};
use crate::rng::{tag, VariateSource};
use crate::{Error, Result};

pub const NEGATIVE_ATTEMPTS: u32 = 100;

/// `batch_size` distinct vertices drawn uniformly from `0..num_vertices`.
pub fn sample_seed_vertices(
    num_vertices: usize,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<VertexId>> {
    if batch_size > num_vertices {
        return Err(Error::input(format!(
            "batch size {batch_size} exceeds {num_vertices} vertices"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, num_vertices, batch_size)
        .into_iter()
        .map(|v| v as VertexId)
        .collect())
}

/// `batch_size` distinct edges of `g` drawn uniformly, as `(src, dst)`.
pub fn sample_edge_batch(
    g: &Graph,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<(VertexId, VertexId)>> {
    if batch_size > g.num_edges() {
        return Err(Error::input(format!(
            "edge batch {batch_size} exceeds {} edges",
            g.num_edges()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indptr = g.indptr();
    Ok(
        rand::seq::index::sample(&mut rng, g.num_edges(), batch_size)
            .into_iter()
            .map(|e| {
                let s = indptr.partition_point(|&p| p <= e) - 1;
                (g.indices()[e], s as VertexId)
            })
            .collect(),
    )
}

/// Seeds for an edge-prediction minibatch.
///
/// For each positive edge one endpoint is picked uniformly, and a negative
/// partner is drawn uniformly among vertices not adjacent to it (rejection
/// sampling, at most [`NEGATIVE_ATTEMPTS`] draws). Returns the distinct
/// endpoints of all positive and negative edges in order of first
/// appearance. `g` is expected to be undirected.
pub fn edge_pred_seeds(
    g: &Graph,
    edge_batch: &[(VertexId, VertexId)],
    source: &VariateSource,
) -> Result<Vec<VertexId>> {
    let n = g.num_vertices();
    let mut endpoints = Vec::with_capacity(edge_batch.len() * 3);
    for (idx, &(u, v)) in edge_batch.iter().enumerate() {
        g.check_vertex(u)?;
        g.check_vertex(v)?;
        let idx = idx as u64;
        let shared = if source.uniform(&[tag::NEGATIVE, idx, 0]) < 0.5 {
            u
        } else {
            v
        };
        let negative = (0..NEGATIVE_ATTEMPTS)
            .map(|attempt| {
                let x = source.uniform(&[tag::NEGATIVE, idx, 1, attempt as u64]);
                ((x * n as f64) as usize).min(n - 1) as VertexId
            })
            .find(|&w| w != shared && !g.has_edge(w, shared))
            .ok_or(Error::RetryExhausted {
                vertex: shared,
                attempts: NEGATIVE_ATTEMPTS,
            })?;
        endpoints.extend([u, v, negative]);
    }
    Ok(dedup_preserving_order(&endpoints))
}
