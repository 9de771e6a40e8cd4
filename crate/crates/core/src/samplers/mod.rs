//! Neighborhood samplers and multi-layer expansion.
//!
//! A layer maps a destination list `S^l` to a [`BipartiteBlock`] whose source
//! list `S^{l+1}` starts with `S^l` itself followed by newly reached vertices
//! in order of first appearance. Randomness is keyed per destination (or per
//! source vertex, for LABOR-0) and per layer, so a vertex samples the same
//! neighborhood no matter which batch or PE it appears in.

mod block;
mod labor;
mod ns;
mod rw;
mod seeds;

use std::fmt;
use std::str::FromStr;

pub use block::{BipartiteBlock, LayerStack};
pub use labor::sample_labor0;
pub use ns::sample_ns;
pub use rw::{rw_visit_counts, sample_rw};
pub use seeds::{edge_pred_seeds, sample_edge_batch, sample_seed_vertices, NEGATIVE_ATTEMPTS};

use crate::graph::{Graph, VertexId};
use crate::rng::{tag, VariateSource};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplerKind {
    Ns,
    Labor0,
    Rw,
    Full,
}

impl SamplerKind {
    pub const SAMPLED: [SamplerKind; 3] = [SamplerKind::Ns, SamplerKind::Labor0, SamplerKind::Rw];
    pub const ALL: [SamplerKind; 4] = [
        SamplerKind::Full,
        SamplerKind::Ns,
        SamplerKind::Labor0,
        SamplerKind::Rw,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Ns => "ns",
            SamplerKind::Labor0 => "labor0",
            SamplerKind::Rw => "rw",
            SamplerKind::Full => "full",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ns" => Ok(SamplerKind::Ns),
            "labor0" | "labor-0" => Ok(SamplerKind::Labor0),
            "rw" => Ok(SamplerKind::Rw),
            "full" => Ok(SamplerKind::Full),
            other => Err(Error::input(format!("unknown sampler `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    /// Maximum sampled in-neighbors per destination (`k`).
    pub fanout: usize,
    /// Random walk length (`o`).
    pub rw_length: usize,
    /// Probability of restarting a walk step from the seed's neighborhood (`p`).
    pub rw_restart: f64,
    /// Walks per seed (`a`).
    pub rw_walks: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            kind: SamplerKind::Labor0,
            fanout: 10,
            rw_length: 3,
            rw_restart: 0.5,
            rw_walks: 100,
        }
    }
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind) -> Self {
        SamplerConfig {
            kind,
            ..Default::default()
        }
    }

    #[must_use]
    pub fn with_fanout(mut self, fanout: usize) -> Self {
        self.fanout = fanout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.fanout == 0 {
            return Err(Error::input("fanout must be positive"));
        }
        if self.kind == SamplerKind::Rw {
            if self.rw_length == 0 || self.rw_walks == 0 {
                return Err(Error::input("random walks need positive length and count"));
            }
            if !(0.0..=1.0).contains(&self.rw_restart) {
                return Err(Error::input("restart probability must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Every in-edge of every destination.
pub fn sample_full(g: &Graph, seeds: &[VertexId]) -> Result<BipartiteBlock> {
    check_seeds(g, seeds)?;
    Ok(BipartiteBlock::build(0, seeds, |s, out| {
        out.extend_from_slice(g.in_neighbors(s))
    }))
}

/// One sampled layer for `dst` using the configured sampler.
pub fn sample_layer(
    g: &Graph,
    dst: &[VertexId],
    cfg: &SamplerConfig,
    source: &VariateSource,
) -> Result<BipartiteBlock> {
    match cfg.kind {
        SamplerKind::Full => sample_full(g, dst),
        SamplerKind::Ns => sample_ns(g, dst, cfg.fanout, source),
        SamplerKind::Labor0 => sample_labor0(g, dst, cfg.fanout, |t| {
            source.uniform(&[tag::LABOR, t as u64])
        }),
        SamplerKind::Rw => sample_rw(g, dst, cfg, source),
    }
}

/// Expands `seeds` through `num_layers` sampled layers. Layer `l` draws its
/// randomness from `source.layer(l)`.
pub fn expand(
    g: &Graph,
    seeds: &[VertexId],
    num_layers: usize,
    cfg: &SamplerConfig,
    source: &VariateSource,
) -> Result<LayerStack> {
    if num_layers == 0 {
        return Err(Error::input("expansion needs at least one layer"));
    }
    cfg.validate()?;
    let mut dst = dedup_preserving_order(seeds);
    let mut blocks = Vec::with_capacity(num_layers);
    for layer in 0..num_layers {
        let mut block = sample_layer(g, &dst, cfg, &source.layer(layer))?;
        block.set_layer(layer);
        dst = block.src_vertices().to_vec();
        blocks.push(block);
    }
    Ok(LayerStack::new(blocks))
}

pub(crate) fn check_seeds(g: &Graph, seeds: &[VertexId]) -> Result<()> {
    seeds.iter().try_for_each(|&s| g.check_vertex(s))
}

pub(crate) fn dedup_preserving_order(ids: &[VertexId]) -> Vec<VertexId> {
    let mut seen = rustc_hash::FxHashSet::default();
    ids.iter().copied().filter(|v| seen.insert(*v)).collect()
}
