//! Immutable in-neighbor CSR graph.
//!
//! An edge `t -> s` is stored under its destination `s`, so `neighbors(s)`
//! returns the in-neighborhood `N(s)` directly. Every sampler in the crate
//! expands from destinations to their in-neighbors.

mod generate;
mod io;

pub use generate::generate_powerlaw;
pub use io::{load_csr, load_edge_list, load_graph, parse_edge_list, save_csr, save_edge_list};

use crate::{Error, Result};

pub type VertexId = u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    indptr: Vec<usize>,
    indices: Vec<VertexId>,
    weights: Option<Vec<f32>>,
}

impl Graph {
    /// Builds a graph from `(src, dst)` pairs. Duplicate edges are kept and
    /// each destination's neighbors keep the input order.
    pub fn from_edges(num_vertices: usize, edges: &[(VertexId, VertexId)]) -> Result<Self> {
        Self::build(
            num_vertices,
            edges.iter().map(|&(t, s)| (t, s, None)),
            false,
        )
    }

    /// Like [`Graph::from_edges`] but with a positive weight per edge.
    pub fn from_weighted_edges(
        num_vertices: usize,
        edges: &[(VertexId, VertexId, f32)],
    ) -> Result<Self> {
        Self::build(
            num_vertices,
            edges.iter().map(|&(t, s, w)| (t, s, Some(w))),
            true,
        )
    }

    fn build<I>(num_vertices: usize, edges: I, weighted: bool) -> Result<Self>
    where
        I: Iterator<Item = (VertexId, VertexId, Option<f32>)> + Clone,
    {
        if num_vertices > VertexId::MAX as usize {
            return Err(Error::input(format!(
                "{num_vertices} vertices exceed the 32-bit id space"
            )));
        }
        let mut counts = vec![0usize; num_vertices + 1];
        for (t, s, w) in edges.clone() {
            for v in [t, s] {
                if v as usize >= num_vertices {
                    return Err(Error::VertexOutOfRange {
                        vertex: v as u64,
                        num_vertices,
                    });
                }
            }
            if let Some(w) = w {
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::input(format!(
                        "edge {t}->{s} has non-positive weight {w}"
                    )));
                }
            }
            counts[s as usize + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let indptr = counts;
        let num_edges = indptr[num_vertices];
        let mut cursor = indptr.clone();
        let mut indices = vec![0; num_edges];
        let mut weights = if weighted {
            Some(vec![0f32; num_edges])
        } else {
            None
        };
        for (t, s, w) in edges {
            let slot = cursor[s as usize];
            cursor[s as usize] += 1;
            indices[slot] = t;
            if let (Some(ws), Some(w)) = (weights.as_mut(), w) {
                ws[slot] = w;
            }
        }
        Ok(Graph {
            indptr,
            indices,
            weights,
        })
    }

    /// Assembles a graph from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        indptr: Vec<usize>,
        indices: Vec<VertexId>,
        weights: Option<Vec<f32>>,
    ) -> Result<Self> {
        let g = Graph {
            indptr,
            indices,
            weights,
        };
        g.validate()?;
        Ok(g)
    }

    /// Checks the structural CSR invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Format(m.to_string()));
        if self.indptr.is_empty() || self.indptr[0] != 0 {
            return bad("indptr must start at 0");
        }
        if self.indptr.windows(2).any(|w| w[0] > w[1]) {
            return bad("indptr must be nondecreasing");
        }
        if *self.indptr.last().unwrap() != self.indices.len() {
            return bad("indptr must end at the number of edges");
        }
        let n = self.num_vertices();
        if self.indices.iter().any(|&t| t as usize >= n) {
            return bad("neighbor id out of range");
        }
        if let Some(w) = &self.weights {
            if w.len() != self.indices.len() {
                return bad("weight count differs from edge count");
            }
            if w.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
                return bad("edge weights must be positive");
            }
        }
        Ok(())
    }

    pub fn num_vertices(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn num_edges(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[VertexId] {
        &self.indices
    }

    pub fn weights(&self) -> Option<&[f32]> {
        self.weights.as_deref()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    /// In-neighbors of `v`, with bounds checking.
    pub fn neighbors(&self, v: VertexId) -> Result<&[VertexId]> {
        self.check_vertex(v)?;
        Ok(self.in_neighbors(v))
    }

    /// In-neighbors of `v`. Panics if `v` is out of range.
    #[inline]
    pub fn in_neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.indices[self.indptr[v]..self.indptr[v + 1]]
    }

    /// Weights of the in-edges of `v`, aligned with [`Graph::in_neighbors`].
    #[inline]
    pub fn in_weights(&self, v: VertexId) -> Option<&[f32]> {
        let v = v as usize;
        self.weights
            .as_ref()
            .map(|w| &w[self.indptr[v]..self.indptr[v + 1]])
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        let v = v as usize;
        self.indptr[v + 1] - self.indptr[v]
    }

    pub fn max_degree(&self) -> usize {
        (0..self.num_vertices() as VertexId)
            .map(|v| self.degree(v))
            .max()
            .unwrap_or(0)
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if (v as usize) < self.num_vertices() {
            Ok(())
        } else {
            Err(Error::VertexOutOfRange {
                vertex: v as u64,
                num_vertices: self.num_vertices(),
            })
        }
    }

    /// True if the edge `t -> s` exists.
    pub fn has_edge(&self, t: VertexId, s: VertexId) -> bool {
        self.in_neighbors(s).contains(&t)
    }

    /// All edges as `(src, dst)` pairs in storage order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.num_vertices()).flat_map(move |s| {
            self.in_neighbors(s as VertexId)
                .iter()
                .map(move |&t| (t, s as VertexId))
        })
    }

    /// The graph with every edge reversed: out-neighbors become in-neighbors.
    pub fn transpose(&self) -> Graph {
        let mut edges: Vec<(VertexId, VertexId, Option<f32>)> =
            Vec::with_capacity(self.num_edges());
        for s in 0..self.num_vertices() as VertexId {
            let ws = self.in_weights(s);
            for (i, &t) in self.in_neighbors(s).iter().enumerate() {
                edges.push((s, t, ws.map(|w| w[i])));
            }
        }
        Self::build(self.num_vertices(), edges.into_iter(), self.is_weighted())
            .expect("transpose of a valid graph is valid")
    }

    /// Symmetrizes the graph: every `t -> s` gains `s -> t`, and duplicate
    /// edges are merged. Merged weighted edges keep the largest weight.
    /// Neighbor lists of the result are sorted.
    pub fn make_undirected(&self) -> Graph {
        let mut edges: Vec<(VertexId, VertexId, f32)> = Vec::with_capacity(2 * self.num_edges());
        for s in 0..self.num_vertices() as VertexId {
            let ws = self.in_weights(s);
            for (i, &t) in self.in_neighbors(s).iter().enumerate() {
                let w = ws.map_or(1.0, |w| w[i]);
                edges.push((s, t, w));
                edges.push((t, s, w));
            }
        }
        // Sort by destination, then source, heaviest first so dedup keeps the max.
        edges.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)).then(b.2.total_cmp(&a.2)));
        edges.dedup_by_key(|e| (e.0, e.1));
        Self::build(
            self.num_vertices(),
            edges
                .into_iter()
                .map(|(t, s, w)| (t, s, self.is_weighted().then_some(w))),
            self.is_weighted(),
        )
        .expect("symmetrization of a valid graph is valid")
    }

    /// True if every edge has its reverse.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(t, s)| self.has_edge(s, t))
    }
}
