use super::{check_seeds, BipartiteBlock};
use crate::graph::{Graph, VertexId};
use crate::rng::{tag, VariateSource};
use crate::Result;

/// Reservoir selection of `k` out of `d` positions. Position `i >= k` rolls
/// `r` uniformly in `0..=i` and replaces slot `r` when `r < k`. Returns the
/// selected positions in increasing order.
pub(crate) fn reservoir_positions(
    d: usize,
    k: usize,
    mut uniform: impl FnMut(usize) -> f64,
) -> Vec<usize> {
    if d <= k {
        return (0..d).collect();
    }
    let mut slots: Vec<usize> = (0..k).collect();
    for i in k..d {
        let r = ((uniform(i) * (i + 1) as f64) as usize).min(i);
        if r < k {
            slots[r] = i;
        }
    }
    slots.sort_unstable();
    slots
}

/// Neighbor sampling: destinations with at most `k` in-neighbors keep all of
/// them, the rest keep `k` distinct positions chosen by reservoir sampling.
/// The reservoir for `s` is driven by `source.uniform(s, i)`, making the
/// result a function of the source and `s` alone.
pub fn sample_ns(
    g: &Graph,
    seeds: &[VertexId],
    k: usize,
    source: &VariateSource,
) -> Result<BipartiteBlock> {
    check_seeds(g, seeds)?;
    Ok(BipartiteBlock::build(0, seeds, |s, out| {
        let nbrs = g.in_neighbors(s);
        let picks = reservoir_positions(nbrs.len(), k, |i| {
            source.uniform(&[tag::NS, s as u64, i as u64])
        });
        out.extend(picks.into_iter().map(|i| nbrs[i]));
    }))
}
