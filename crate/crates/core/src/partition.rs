//! 1D vertex partitioning: each vertex, together with its in-edges, belongs
//! to exactly one PE.

use std::collections::VecDeque;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::graph::{Graph, VertexId};
use crate::rng::{mix, tag};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionMap {
    num_parts: usize,
    owner: Vec<u32>,
}

impl PartitionMap {
    pub fn new(num_parts: usize, owner: Vec<u32>) -> Result<Self> {
        let pm = PartitionMap { num_parts, owner };
        pm.validate()?;
        Ok(pm)
    }

    /// Every vertex on part 0.
    pub fn single(num_vertices: usize) -> Self {
        PartitionMap {
            num_parts: 1,
            owner: vec![0; num_vertices],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_parts == 0 {
            return Err(Error::input("partition needs at least one part"));
        }
        if let Some(v) = self
            .owner
            .iter()
            .position(|&p| p as usize >= self.num_parts)
        {
            return Err(Error::contract(format!("vertex {v} has no valid owner")));
        }
        Ok(())
    }

    pub fn num_parts(&self) -> usize {
        self.num_parts
    }

    pub fn num_vertices(&self) -> usize {
        self.owner.len()
    }

    #[inline]
    pub fn owner(&self, v: VertexId) -> usize {
        self.owner[v as usize] as usize
    }

    pub fn owners(&self) -> &[u32] {
        &self.owner
    }

    pub fn part_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_parts];
        for &p in &self.owner {
            sizes[p as usize] += 1;
        }
        sizes
    }

    /// Vertices owned by `part`, in increasing id order (`V_p`).
    pub fn part_vertices(&self, part: usize) -> Vec<VertexId> {
        (0..self.owner.len() as VertexId)
            .filter(|&v| self.owner(v) == part)
            .collect()
    }

    /// Splits `vertices` by owner, preserving order within each part.
    pub fn split_by_owner(&self, vertices: &[VertexId]) -> Vec<Vec<VertexId>> {
        let mut parts = vec![Vec::new(); self.num_parts];
        for &v in vertices {
            parts[self.owner(v)].push(v);
        }
        parts
    }

    /// Writes `vertex,part` CSV rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "vertex,part")?;
        for (v, p) in self.owner.iter().enumerate() {
            writeln!(out, "{v},{p}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partitioner {
    Random,
    Locality,
}

impl fmt::Display for Partitioner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partitioner::Random => "random",
            Partitioner::Locality => "locality",
        })
    }
}

impl FromStr for Partitioner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Partitioner::Random),
            "locality" => Ok(Partitioner::Locality),
            other => Err(Error::input(format!("unknown partitioner `{other}`"))),
        }
    }
}

pub fn partition(g: &Graph, parts: usize, kind: Partitioner, seed: u64) -> Result<PartitionMap> {
    match kind {
        Partitioner::Random => partition_random(g.num_vertices(), parts, seed),
        Partitioner::Locality => partition_locality(g, parts),
    }
}

/// Owner of `v` is a hash of `(seed, v)` reduced modulo `parts`.
pub fn partition_random(num_vertices: usize, parts: usize, seed: u64) -> Result<PartitionMap> {
    if parts == 0 {
        return Err(Error::input("partition needs at least one part"));
    }
    let owner = (0..num_vertices as u64)
        .map(|v| (mix(seed, &[tag::PARTITION, v]) % parts as u64) as u32)
        .collect();
    Ok(PartitionMap {
        num_parts: parts,
        owner,
    })
}

/// Greedy BFS region growing over the undirected view of `g`. Parts are
/// filled one after another up to `ceil(n / parts)` vertices; the frontier
/// carries over into the next part, and a fresh BFS starts from the smallest
/// unassigned id whenever the frontier runs dry.
pub fn partition_locality(g: &Graph, parts: usize) -> Result<PartitionMap> {
    if parts == 0 {
        return Err(Error::input("partition needs at least one part"));
    }
    let n = g.num_vertices();
    let cap = n.div_ceil(parts).max(1);
    let out = g.transpose();
    const UNASSIGNED: u32 = u32::MAX;
    let mut owner = vec![UNASSIGNED; n];
    let mut queued = vec![false; n];
    let mut queue = VecDeque::new();
    let (mut part, mut filled) = (0u32, 0usize);
    let mut next_start = 0usize;
    let mut assigned = 0usize;
    while assigned < n {
        let v = match queue.pop_front() {
            Some(v) => v,
            None => {
                while owner[next_start] != UNASSIGNED {
                    next_start += 1;
                }
                queued[next_start] = true;
                next_start as VertexId
            }
        };
        if owner[v as usize] != UNASSIGNED {
            continue;
        }
        if filled == cap {
            part += 1;
            filled = 0;
        }
        owner[v as usize] = part;
        filled += 1;
        assigned += 1;
        for &w in g.in_neighbors(v).iter().chain(out.in_neighbors(v)) {
            if !queued[w as usize] {
                queued[w as usize] = true;
                queue.push_back(w);
            }
        }
    }
    PartitionMap::new(parts, owner)
}

/// Fraction of edges `t -> s` whose endpoints live on different parts.
pub fn cross_edge_ratio(g: &Graph, pm: &PartitionMap) -> f64 {
    if g.num_edges() == 0 {
        return 0.0;
    }
    let cross = g
        .edges()
        .filter(|&(t, s)| pm.owner(t) != pm.owner(s))
        .count();
    cross as f64 / g.num_edges() as f64
}
