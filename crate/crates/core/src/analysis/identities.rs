use std::collections::VecDeque;

use crate::graph::{Graph, VertexId};
use crate::rng::VariateSource;
use crate::samplers::{expand, sample_seed_vertices, SamplerConfig, SamplerKind};
use crate::{Error, Result};

/// Largest graph the exhaustive checks accept.
pub const MAX_VERTICES: usize = 64;
/// Largest seed set the exhaustive checks accept.
pub const MAX_SEEDS: usize = 6;

/// Vertices within `layers` in-hops of `seed`, as a bitset.
fn reach(g: &Graph, seed: VertexId, layers: usize) -> u64 {
    let mut seen = 1u64 << seed;
    let mut queue = VecDeque::from([(seed, 0usize)]);
    while let Some((v, d)) = queue.pop_front() {
        if d == layers {
            continue;
        }
        for &t in g.in_neighbors(v) {
            if seen & (1 << t) == 0 {
                seen |= 1 << t;
                queue.push_back((t, d + 1));
            }
        }
    }
    seen
}

fn check_small(g: &Graph, seeds: &[VertexId]) -> Result<()> {
    if g.num_vertices() > MAX_VERTICES {
        return Err(Error::input(format!(
            "exhaustive checks need at most {MAX_VERTICES} vertices, graph has {}",
            g.num_vertices()
        )));
    }
    if seeds.len() > MAX_SEEDS {
        return Err(Error::input(format!(
            "exhaustive checks need at most {MAX_SEEDS} seeds"
        )));
    }
    let mut mask = 0u64;
    for &s in seeds {
        g.check_vertex(s)?;
        if mask & (1 << s) != 0 {
            return Err(Error::input(format!("seed {s} repeated")));
        }
        mask |= 1 << s;
    }
    Ok(())
}

/// `(|T_l|, |T2_l|)`: vertices of the depth-`l` closure reached from exactly
/// one seed, and from exactly two seeds.
pub fn unique_attribution(g: &Graph, seeds: &[VertexId], layers: usize) -> Result<(usize, usize)> {
    check_small(g, seeds)?;
    Ok(attribution(g, seeds, layers))
}

fn attribution(g: &Graph, seeds: &[VertexId], layers: usize) -> (usize, usize) {
    let mut counts = vec![0u8; g.num_vertices()];
    for &s in seeds {
        let r = reach(g, s, layers);
        for (v, c) in counts.iter_mut().enumerate() {
            *c += (r >> v & 1) as u8;
        }
    }
    (
        counts.iter().filter(|&&c| c == 1).count(),
        counts.iter().filter(|&&c| c == 2).count(),
    )
}

/// `|S^l|` from the production FULL expansion.
fn closure_size(g: &Graph, seeds: &[VertexId], layers: usize) -> Result<usize> {
    if layers == 0 {
        return Ok(seeds.len());
    }
    let stack = expand(
        g,
        seeds,
        layers,
        &SamplerConfig::new(SamplerKind::Full),
        &VariateSource::plain(0),
    )?;
    Ok(stack.input_vertices().len())
}

/// Both sides of the three leave-one-out relations for one seed set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityCheck {
    pub seeds: Vec<VertexId>,
    /// `|S^l|`
    pub size: usize,
    /// `Σ_s |S'^l|` over the leave-one-out sets `S' = S^0 \ {s}`.
    pub loo_sizes: usize,
    pub t: usize,
    pub t2: usize,
    /// `Σ_s |T_l(S')|`
    pub loo_t: usize,
}

impl IdentityCheck {
    fn n(&self) -> usize {
        self.seeds.len()
    }

    /// `Σ_s (|S^l| - |S'^l|) = |T_l|`
    pub fn removal_identity(&self) -> bool {
        self.n() * self.size == self.loo_sizes + self.t
    }

    /// `|S^l| (n - 1) <= Σ_s |S'^l|`
    pub fn monotonicity(&self) -> bool {
        self.size * (self.n() - 1) <= self.loo_sizes
    }

    /// `|T_l| - 2 |T2_l| = Σ_s (|T_l| - |T_l(S')|)`
    pub fn pair_identity(&self) -> bool {
        self.t + self.loo_t == self.n() * self.t + 2 * self.t2
    }

    pub fn holds(&self) -> [bool; 3] {
        [
            self.removal_identity(),
            self.monotonicity(),
            self.pair_identity(),
        ]
    }
}

/// Evaluates the relations for one seed set. Closure sizes come from
/// [`expand`]; attribution sets come from separate per-seed searches.
pub fn verify_seed_set(g: &Graph, seeds: &[VertexId], layers: usize) -> Result<IdentityCheck> {
    check_small(g, seeds)?;
    if seeds.is_empty() {
        return Err(Error::input("seed set is empty"));
    }
    let (t, t2) = attribution(g, seeds, layers);
    let mut loo_sizes = 0;
    let mut loo_t = 0;
    for i in 0..seeds.len() {
        let rest: Vec<VertexId> = seeds
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &s)| s)
            .collect();
        loo_sizes += closure_size(g, &rest, layers)?;
        loo_t += attribution(g, &rest, layers).0;
    }
    Ok(IdentityCheck {
        seeds: seeds.to_vec(),
        size: closure_size(g, seeds, layers)?,
        loo_sizes,
        t,
        t2,
        loo_t,
    })
}

/// Violation counts over random seed sets.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdentityReport {
    pub trials: usize,
    /// Failures of the removal identity, the monotonicity inequality and the
    /// pair identity, in that order.
    pub violations: [usize; 3],
    pub failures: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.violations == [0; 3]
    }

    pub fn merge(mut self, other: IdentityReport) -> IdentityReport {
        self.trials += other.trials;
        for (a, b) in self.violations.iter_mut().zip(other.violations) {
            *a += b;
        }
        self.failures.extend(other.failures);
        self
    }
}

/// Draws `trials` random seed sets of size `n` and checks every relation
/// exactly.
pub fn verify_identities(
    g: &Graph,
    n: usize,
    layers: usize,
    trials: usize,
    seed: u64,
) -> Result<IdentityReport> {
    if n == 0 || n > g.num_vertices() {
        return Err(Error::input(format!(
            "batch size {n} outside 1..={}",
            g.num_vertices()
        )));
    }
    let mut report = IdentityReport::default();
    for t in 0..trials {
        let seeds = sample_seed_vertices(g.num_vertices(), n, crate::rng::mix(seed, &[t as u64]))?;
        let check = verify_seed_set(g, &seeds, layers)?;
        report.trials += 1;
        let holds = check.holds();
        for (v, ok) in report.violations.iter_mut().zip(holds) {
            *v += usize::from(!ok);
        }
        if holds.contains(&false) {
            report.failures.push(check);
        }
    }
    Ok(report)
}
