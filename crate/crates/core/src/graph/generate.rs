use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, VertexId};
use crate::{Error, Result};

/// Chung-Lu style expected-degree generator.
///
/// Vertex `i` (after a seeded relabeling) gets weight `(rank + 1)^-skew`, and
/// `round(n * avg_degree)` directed edges are drawn with both endpoints chosen
/// proportionally to weight. `skew = 0` gives an Erdős–Rényi-like multigraph;
/// larger values give heavier tails. Self-loops are redrawn when `n > 1`.
pub fn generate_powerlaw(
    num_vertices: usize,
    avg_degree: f64,
    skew: f64,
    seed: u64,
) -> Result<Graph> {
    if num_vertices == 0 {
        return Err(Error::input("generator needs at least one vertex"));
    }
    if !(avg_degree.is_finite() && avg_degree > 0.0) {
        return Err(Error::input(format!(
            "avg_degree must be positive, got {avg_degree}"
        )));
    }
    if !(skew.is_finite() && skew >= 0.0) {
        return Err(Error::input(format!(
            "skew must be nonnegative, got {skew}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<VertexId> = (0..num_vertices as VertexId).collect();
    labels.shuffle(&mut rng);
    let weights: Vec<f64> = (0..num_vertices)
        .map(|rank| ((rank + 1) as f64).powf(-skew))
        .collect();
    let dist = WeightedIndex::new(&weights).expect("weights are positive");

    let num_edges = (num_vertices as f64 * avg_degree).round() as usize;
    let mut edges = Vec::with_capacity(num_edges);
    while edges.len() < num_edges {
        let t = labels[dist.sample(&mut rng)];
        let s = labels[dist.sample(&mut rng)];
        if t == s && num_vertices > 1 {
            continue;
        }
        edges.push((t, s));
    }
    Graph::from_edges(num_vertices, &edges)
}
