use super::{check_seeds, BipartiteBlock};
use crate::graph::{Graph, VertexId};
use crate::Result;

/// LABOR-0: edge `t -> s` is kept iff `variate(t) <= k / d_s`.
///
/// The variate depends only on the source vertex `t`, so seeds that share a
/// neighbor make the same decision for it whenever their degrees agree.
pub fn sample_labor0<F>(
    g: &Graph,
    seeds: &[VertexId],
    k: usize,
    variate: F,
) -> Result<BipartiteBlock>
where
    F: Fn(VertexId) -> f64,
{
    check_seeds(g, seeds)?;
    Ok(BipartiteBlock::build(0, seeds, |s, out| {
        let nbrs = g.in_neighbors(s);
        if nbrs.len() <= k {
            out.extend_from_slice(nbrs);
            return;
        }
        let threshold = k as f64 / nbrs.len() as f64;
        out.extend(nbrs.iter().copied().filter(|&t| variate(t) <= threshold));
    }))
}
