//! Cooperative and independent minibatching on simulated processing
//! elements (PEs).
//!
//! Every PE owns the vertices a [`PartitionMap`] assigns to it. In the
//! cooperative mode PE `p` samples in-edges only for vertices it owns, then
//! hands every sampled id to its owner through an all-to-all exchange; owners
//! deduplicate what they receive to form their next layer. In the independent
//! mode every PE expands its own seeds over the whole graph and no ids move.

mod exchange;
mod model;
mod train;

use rayon::prelude::*;

pub use exchange::{all_to_all, Direction, ExchangeRecord};
pub use model::{
    gcn_backward, gcn_forward, softmax_cross_entropy, Activation, FeatureMatrix, FeatureStore,
    GcnModel,
};
pub use train::{coop_train_step, indep_train_step, synthetic_labels, StepOutput, TrainInputs};

use crate::graph::{Graph, VertexId};
use crate::partition::PartitionMap;
use crate::rng::VariateSource;
use crate::samplers::{
    dedup_preserving_order, expand, sample_layer, BipartiteBlock, LayerStack, SamplerConfig,
};
use crate::{Error, Result};

/// What one PE holds after cooperative sampling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoopStack {
    blocks: Vec<BipartiteBlock>,
    owned: Vec<Vec<VertexId>>,
}

impl CoopStack {
    /// Block `l`: edges from the sampled list `S̃^{l+1}_p` into `S^l_p`.
    pub fn blocks(&self) -> &[BipartiteBlock] {
        &self.blocks
    }

    pub fn num_layers(&self) -> usize {
        self.blocks.len()
    }

    /// `S^l_p`, the vertices this PE owns at layer `l`.
    pub fn owned(&self, l: usize) -> &[VertexId] {
        &self.owned[l]
    }

    /// `S̃^l_p`, the vertices this PE sampled for layer `l` (before the
    /// exchange). At layer 0 this is the seed list.
    pub fn sampled(&self, l: usize) -> &[VertexId] {
        if l == 0 {
            &self.owned[0]
        } else {
            self.blocks[l - 1].src_vertices()
        }
    }

    pub fn total_edges(&self) -> usize {
        self.blocks.iter().map(BipartiteBlock::num_edges).sum()
    }

    /// Reinterprets the blocks as a chained [`LayerStack`]. Only succeeds when
    /// every sampled list was kept whole, as with a single PE.
    pub fn to_layer_stack(&self) -> Result<LayerStack> {
        let stack = LayerStack::new(self.blocks.clone());
        stack.validate()?;
        Ok(stack)
    }
}

/// Output of [`coop_sample`]: one [`CoopStack`] per PE and the cached
/// exchange of every layer boundary (`exchanges[l]` turns `S̃^{l+1}` into
/// `S^{l+1}`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoopSample {
    pub stacks: Vec<CoopStack>,
    pub exchanges: Vec<ExchangeRecord>,
}

impl CoopSample {
    pub fn num_parts(&self) -> usize {
        self.stacks.len()
    }

    pub fn num_layers(&self) -> usize {
        self.exchanges.len()
    }
}

/// Size accounting for one PE at one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LayerMetrics {
    pub pe: usize,
    pub layer: usize,
    /// `|S^l_p|`
    pub s_l: usize,
    /// `|S̃^l_p|`
    pub s_tilde_l: usize,
    /// `|E^l_p|`; zero at the input layer.
    pub e_l: usize,
    /// Ids of `S̃^l_p` sent to other PEs.
    pub comm_vertices: usize,
    /// Feature bytes read from storage; only the input layer loads.
    pub feat_bytes: u64,
}

/// Metrics of one training (or sampling) step, ordered by PE then layer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepMetrics {
    pub rows: Vec<LayerMetrics>,
    pub loss: f64,
}

impl StepMetrics {
    pub fn for_coop(sample: &CoopSample, row_bytes: u64) -> Self {
        let layers = sample.num_layers();
        let mut rows = Vec::new();
        for (p, stack) in sample.stacks.iter().enumerate() {
            for l in 0..=layers {
                rows.push(LayerMetrics {
                    pe: p,
                    layer: l,
                    s_l: stack.owned(l).len(),
                    s_tilde_l: stack.sampled(l).len(),
                    e_l: stack.blocks.get(l).map_or(0, BipartiteBlock::num_edges),
                    comm_vertices: if l == 0 {
                        0
                    } else {
                        sample.exchanges[l - 1].communicated(p)
                    },
                    feat_bytes: if l == layers {
                        stack.owned(l).len() as u64 * row_bytes
                    } else {
                        0
                    },
                });
            }
        }
        StepMetrics { rows, loss: 0.0 }
    }

    pub fn for_indep(stacks: &[LayerStack], row_bytes: u64) -> Self {
        let mut rows = Vec::new();
        for (p, stack) in stacks.iter().enumerate() {
            let layers = stack.num_layers();
            for l in 0..=layers {
                let s = stack.layer_vertices(l).len();
                rows.push(LayerMetrics {
                    pe: p,
                    layer: l,
                    s_l: s,
                    s_tilde_l: s,
                    e_l: stack.blocks().get(l).map_or(0, BipartiteBlock::num_edges),
                    comm_vertices: 0,
                    feat_bytes: if l == layers { s as u64 * row_bytes } else { 0 },
                });
            }
        }
        StepMetrics { rows, loss: 0.0 }
    }

    pub fn num_parts(&self) -> usize {
        self.rows.iter().map(|r| r.pe + 1).max().unwrap_or(0)
    }

    /// `Σ_p |S^l_p|`
    pub fn vertices_at(&self, layer: usize) -> usize {
        self.rows
            .iter()
            .filter(|r| r.layer == layer)
            .map(|r| r.s_l)
            .sum()
    }

    /// `Σ_p |E^l_p|`
    pub fn edges_at(&self, layer: usize) -> usize {
        self.rows
            .iter()
            .filter(|r| r.layer == layer)
            .map(|r| r.e_l)
            .sum()
    }

    pub fn total_edges(&self) -> usize {
        self.rows.iter().map(|r| r.e_l).sum()
    }

    pub fn total_comm(&self) -> usize {
        self.rows.iter().map(|r| r.comm_vertices).sum()
    }

    pub fn total_feat_bytes(&self) -> u64 {
        self.rows.iter().map(|r| r.feat_bytes).sum()
    }
}

fn check_owned_seeds(pm: &PartitionMap, per_pe_seeds: &[Vec<VertexId>], g: &Graph) -> Result<()> {
    if pm.num_vertices() != g.num_vertices() {
        return Err(Error::input(format!(
            "partition covers {} vertices, graph has {}",
            pm.num_vertices(),
            g.num_vertices()
        )));
    }
    if per_pe_seeds.len() != pm.num_parts() {
        return Err(Error::input(format!(
            "{} seed lists for {} PEs",
            per_pe_seeds.len(),
            pm.num_parts()
        )));
    }
    for (p, seeds) in per_pe_seeds.iter().enumerate() {
        for &s in seeds {
            g.check_vertex(s)?;
            if pm.owner(s) != p {
                return Err(Error::input(format!(
                    "seed {s} given to PE {p} but owned by PE {}",
                    pm.owner(s)
                )));
            }
        }
    }
    Ok(())
}

/// Cooperative sampling. Every PE runs the same `cfg` and `source`; layer `l`
/// draws from `source.layer(l)`, so a vertex's sampling decision does not
/// depend on which PE makes it.
pub fn coop_sample(
    g: &Graph,
    pm: &PartitionMap,
    per_pe_seeds: &[Vec<VertexId>],
    num_layers: usize,
    cfg: &SamplerConfig,
    source: &VariateSource,
) -> Result<CoopSample> {
    if num_layers == 0 {
        return Err(Error::input("expansion needs at least one layer"));
    }
    cfg.validate()?;
    check_owned_seeds(pm, per_pe_seeds, g)?;
    let parts = pm.num_parts();
    let mut owned: Vec<Vec<Vec<VertexId>>> = per_pe_seeds
        .iter()
        .map(|s| vec![dedup_preserving_order(s)])
        .collect();
    let mut blocks: Vec<Vec<BipartiteBlock>> = vec![Vec::with_capacity(num_layers); parts];
    let mut exchanges = Vec::with_capacity(num_layers);
    for l in 0..num_layers {
        let layer_source = source.layer(l);
        let sampled: Vec<BipartiteBlock> = owned
            .par_iter()
            .map(|o| {
                let mut b = sample_layer(g, &o[l], cfg, &layer_source)?;
                b.set_layer(l);
                Ok(b)
            })
            .collect::<Result<_>>()?;
        let requested: Vec<&[VertexId]> =
            sampled.iter().map(BipartiteBlock::src_vertices).collect();
        let record = ExchangeRecord::build(l, pm, &requested)?;
        for (q, next) in record.owned().iter().enumerate() {
            owned[q].push(next.clone());
        }
        for (p, b) in sampled.into_iter().enumerate() {
            blocks[p].push(b);
        }
        exchanges.push(record);
    }
    let stacks = blocks
        .into_iter()
        .zip(owned)
        .map(|(blocks, owned)| CoopStack { blocks, owned })
        .collect();
    Ok(CoopSample { stacks, exchanges })
}

/// Independent sampling: each PE expands its own seeds over the whole graph.
pub fn indep_sample(
    g: &Graph,
    per_pe_seeds: &[Vec<VertexId>],
    num_layers: usize,
    cfg: &SamplerConfig,
    source: &VariateSource,
) -> Result<Vec<LayerStack>> {
    per_pe_seeds
        .par_iter()
        .map(|s| expand(g, s, num_layers, cfg, source))
        .collect()
}
