use rustc_hash::FxHashMap;

use crate::graph::VertexId;
use crate::{Error, Result};

/// One sampled layer: edges from `src_vertices` into `dst_vertices`.
///
/// `src_vertices` always begins with `dst_vertices` in the same order, so a
/// destination's own row sits at the same index on both sides. Edges are
/// stored as `(src_index, dst_index)` grouped by destination.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BipartiteBlock {
    layer: usize,
    dst: Vec<VertexId>,
    src: Vec<VertexId>,
    edges: Vec<(u32, u32)>,
}

impl BipartiteBlock {
    /// Builds a block by asking `sample` for the in-neighbors of each
    /// (deduplicated) destination.
    pub(crate) fn build<F>(layer: usize, dst: &[VertexId], mut sample: F) -> Self
    where
        F: FnMut(VertexId, &mut Vec<VertexId>),
    {
        let mut index: FxHashMap<VertexId, u32> = FxHashMap::default();
        index.reserve(dst.len() * 2);
        let mut dst_list = Vec::with_capacity(dst.len());
        for &d in dst {
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(d) {
                e.insert(dst_list.len() as u32);
                dst_list.push(d);
            }
        }
        let mut src = dst_list.clone();
        let mut edges = Vec::new();
        let mut buf = Vec::new();
        for (di, &d) in dst_list.iter().enumerate() {
            buf.clear();
            sample(d, &mut buf);
            for &t in &buf {
                let si = *index.entry(t).or_insert_with(|| {
                    src.push(t);
                    (src.len() - 1) as u32
                });
                edges.push((si, di as u32));
            }
        }
        BipartiteBlock {
            layer,
            dst: dst_list,
            src,
            edges,
        }
    }

    /// Assembles a block from explicit parts, checking the invariants.
    pub fn from_parts(
        layer: usize,
        dst: Vec<VertexId>,
        src: Vec<VertexId>,
        edges: Vec<(u32, u32)>,
    ) -> Result<Self> {
        let block = BipartiteBlock {
            layer,
            dst,
            src,
            edges,
        };
        block.validate()?;
        Ok(block)
    }

    pub fn validate(&self) -> Result<()> {
        if self.src.len() < self.dst.len() || self.src[..self.dst.len()] != self.dst[..] {
            return Err(Error::contract(
                "source list must start with the destinations",
            ));
        }
        let mut seen = rustc_hash::FxHashSet::default();
        if !self.src.iter().all(|v| seen.insert(*v)) {
            return Err(Error::contract("duplicate source vertex"));
        }
        for &(s, d) in &self.edges {
            if s as usize >= self.src.len() || d as usize >= self.dst.len() {
                return Err(Error::contract("edge endpoint out of range"));
            }
        }
        Ok(())
    }

    pub(crate) fn set_layer(&mut self, layer: usize) {
        self.layer = layer;
    }

    pub fn layer(&self) -> usize {
        self.layer
    }

    pub fn dst_vertices(&self) -> &[VertexId] {
        &self.dst
    }

    pub fn src_vertices(&self) -> &[VertexId] {
        &self.src
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn num_dst(&self) -> usize {
        self.dst.len()
    }

    pub fn num_src(&self) -> usize {
        self.src.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dst.is_empty()
    }

    /// Sampled in-neighbors (as vertex ids) of each destination.
    pub fn neighbor_lists(&self) -> Vec<Vec<VertexId>> {
        let mut lists = vec![Vec::new(); self.dst.len()];
        for &(s, d) in &self.edges {
            lists[d as usize].push(self.src[s as usize]);
        }
        lists
    }
}

/// The blocks of an `L`-layer expansion, from the seeds outward.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LayerStack {
    blocks: Vec<BipartiteBlock>,
}

impl LayerStack {
    pub fn new(blocks: Vec<BipartiteBlock>) -> Self {
        LayerStack { blocks }
    }

    pub fn validate(&self) -> Result<()> {
        for b in &self.blocks {
            b.validate()?;
        }
        for w in self.blocks.windows(2) {
            if w[0].src_vertices() != w[1].dst_vertices() {
                return Err(Error::contract("consecutive blocks do not chain"));
            }
        }
        Ok(())
    }

    pub fn blocks(&self) -> &[BipartiteBlock] {
        &self.blocks
    }

    pub fn num_layers(&self) -> usize {
        self.blocks.len()
    }

    /// `S^l` for `0 <= l <= L`.
    pub fn layer_vertices(&self, l: usize) -> &[VertexId] {
        match l {
            0 => self.blocks.first().map_or(&[], |b| b.dst_vertices()),
            _ => self.blocks[l - 1].src_vertices(),
        }
    }

    pub fn seeds(&self) -> &[VertexId] {
        self.layer_vertices(0)
    }

    /// `S^L`, the vertices whose input features are needed.
    pub fn input_vertices(&self) -> &[VertexId] {
        self.layer_vertices(self.blocks.len())
    }

    /// `Σ_{l=1..L} |S^l|`.
    pub fn total_vertices(&self) -> usize {
        self.blocks.iter().map(|b| b.num_src()).sum()
    }

    pub fn total_edges(&self) -> usize {
        self.blocks.iter().map(|b| b.num_edges()).sum()
    }
}
