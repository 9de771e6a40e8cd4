use super::{check_seeds, BipartiteBlock, SamplerConfig};
use crate::graph::{Graph, VertexId};
use crate::rng::{tag, VariateSource};
use crate::Result;

/// CSR position of an in-neighbor of `v` chosen with probability
/// proportional to edge weight (uniformly for unweighted graphs). `None` if
/// `v` has no in-neighbors.
#[inline]
fn pick_slot(g: &Graph, v: VertexId, u: f64) -> Option<usize> {
    let (lo, hi) = (g.indptr()[v as usize], g.indptr()[v as usize + 1]);
    let d = hi - lo;
    if d == 0 {
        return None;
    }
    match g.in_weights(v) {
        None => Some(lo + ((u * d as f64) as usize).min(d - 1)),
        Some(ws) => {
            let total: f64 = ws.iter().map(|&w| w as f64).sum();
            let mut target = u * total;
            for (i, &w) in ws.iter().enumerate() {
                target -= w as f64;
                if target < 0.0 {
                    return Some(lo + i);
                }
            }
            Some(hi - 1)
        }
    }
}

/// Visit counts of the `a` walks started at `s`, excluding visits to `s`.
///
/// Each walk first steps into `N(s)`. Every further step restarts from
/// `N(s)` with probability `p` and otherwise continues from the current
/// vertex. A walk that reaches a vertex without in-neighbors stops early.
/// Returned sorted by vertex id.
pub fn rw_visit_counts(
    g: &Graph,
    s: VertexId,
    cfg: &SamplerConfig,
    source: &VariateSource,
) -> Vec<(VertexId, u32)> {
    let mut visits = Vec::new();
    walk_all(g, s, cfg, source, &mut visits);
    visits.sort_unstable();
    let mut out: Vec<(VertexId, u32)> = Vec::new();
    for &v in &visits {
        match out.last_mut() {
            Some((last, n)) if *last == v => *n += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Appends every non-seed vertex visited by the walks from `s`.
///
/// Walks advance in lockstep. Each step first resolves every walk's CSR
/// slot and only then reads the neighbors, so the scattered loads of
/// different walks overlap instead of queuing behind branch misses.
fn walk_all(
    g: &Graph,
    s: VertexId,
    cfg: &SamplerConfig,
    source: &VariateSource,
    visits: &mut Vec<VertexId>,
) {
    const DEAD: usize = usize::MAX;
    if g.degree(s) == 0 {
        return;
    }
    let restart = source.prefix(&[tag::RW_RESTART, s as u64]);
    let pick = source.prefix(&[tag::RW_PICK, s as u64]);
    let walks: Vec<_> = (0..cfg.rw_walks as u64)
        .map(|w| (restart.extend(&[w]), pick.extend(&[w])))
        .collect();
    let mut cur = vec![s; walks.len()];
    let mut slot = vec![0usize; walks.len()];
    let indices = g.indices();
    for step in 0..cfg.rw_length as u64 {
        for ((slot, &at), (restart, pick)) in slot.iter_mut().zip(&cur).zip(&walks) {
            if *slot == DEAD {
                continue;
            }
            let stay = step > 0 && restart.uniform(&[step]) >= cfg.rw_restart;
            let base = if stay { at } else { s };
            *slot = pick_slot(g, base, pick.uniform(&[step])).unwrap_or(DEAD);
        }
        for (&slot, at) in slot.iter().zip(cur.iter_mut()) {
            if slot != DEAD {
                *at = indices[slot];
                if *at != s {
                    visits.push(*at);
                }
            }
        }
    }
}

/// Random-walk sampling: the `k` most visited vertices (ties to the smaller
/// id) become the sampled in-neighbors of each seed.
pub fn sample_rw(
    g: &Graph,
    seeds: &[VertexId],
    cfg: &SamplerConfig,
    source: &VariateSource,
) -> Result<BipartiteBlock> {
    check_seeds(g, seeds)?;
    cfg.validate()?;
    // Dense counters shared across destinations; only touched slots are reset.
    let mut counts = vec![0u32; g.num_vertices()];
    let mut visits = Vec::new();
    let mut ranked: Vec<(u32, VertexId)> = Vec::new();
    Ok(BipartiteBlock::build(0, seeds, |s, out| {
        visits.clear();
        walk_all(g, s, cfg, source, &mut visits);
        ranked.clear();
        for &v in &visits {
            let c = &mut counts[v as usize];
            if *c == 0 {
                ranked.push((0, v));
            }
            *c += 1;
        }
        for (c, v) in ranked.iter_mut() {
            *c = std::mem::take(&mut counts[*v as usize]);
        }
        // Most visits first, then smaller id.
        let order = |a: &(u32, VertexId), b: &(u32, VertexId)| b.0.cmp(&a.0).then(a.1.cmp(&b.1));
        if ranked.len() > cfg.fanout {
            ranked.select_nth_unstable_by(cfg.fanout, order);
            ranked.truncate(cfg.fanout);
        }
        ranked.sort_unstable_by(order);
        out.extend(ranked.iter().map(|&(_, v)| v));
    }))
}
