use std::fmt;
use std::str::FromStr;

use super::{feature_load_sim, LruCache};
use crate::graph::{Graph, VertexId};
use crate::rng::{mix, tag, Kappa, SeedSchedule, VariateSource};
use crate::samplers::{expand, sample_layer, sample_seed_vertices, LayerStack, SamplerConfig};
use crate::{Error, Result};

/// How consecutive minibatches relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Fresh seeds and fresh randomness every step.
    Independent,
    /// Every `κ` steps a `κb` super-batch is drawn and split into `κ`
    /// consecutive `b`-batches sharing its randomness.
    Nested,
    /// Fresh seeds every step; sampler variates drift smoothly between two
    /// seeds over `κ` steps.
    Smoothed,
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleMode::Independent => "independent",
            ScheduleMode::Nested => "nested",
            ScheduleMode::Smoothed => "smoothed",
        })
    }
}

impl FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "independent" => Ok(ScheduleMode::Independent),
            "nested" => Ok(ScheduleMode::Nested),
            "smoothed" => Ok(ScheduleMode::Smoothed),
            other => Err(Error::input(format!("unknown schedule mode `{other}`"))),
        }
    }
}

/// Stream of `(seeds, variate source)` pairs, one per training step.
#[derive(Debug, Clone)]
pub struct MinibatchSchedule {
    mode: ScheduleMode,
    kappa: Kappa,
    batch_size: usize,
    num_vertices: usize,
    seed: u64,
    step: u64,
    smooth: SeedSchedule,
    super_batch: Vec<VertexId>,
    super_source: VariateSource,
}

impl MinibatchSchedule {
    pub fn new(
        mode: ScheduleMode,
        kappa: Kappa,
        batch_size: usize,
        num_vertices: usize,
        seed: u64,
    ) -> Result<Self> {
        if batch_size == 0 || batch_size > num_vertices {
            return Err(Error::input(format!(
                "batch size {batch_size} must be in 1..={num_vertices}"
            )));
        }
        if mode == ScheduleMode::Nested {
            match kappa.get() {
                None => return Err(Error::input("nested batches need a finite kappa")),
                Some(k) if (k as u128) * batch_size as u128 > num_vertices as u128 => {
                    return Err(Error::input(format!(
                        "super-batch of {k} x {batch_size} exceeds {num_vertices} vertices"
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(MinibatchSchedule {
            mode,
            kappa,
            batch_size,
            num_vertices,
            seed,
            step: 0,
            smooth: SeedSchedule::new(kappa, seed),
            super_batch: Vec::new(),
            super_source: VariateSource::plain(seed),
        })
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    pub fn kappa(&self) -> Kappa {
        self.kappa
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    fn fresh_seeds(&self, count: usize, key: &[u64]) -> Result<Vec<VertexId>> {
        sample_seed_vertices(self.num_vertices, count, mix(self.seed, key))
    }

    /// Seeds and variate source of the next step.
    pub fn next_batch(&mut self) -> Result<(Vec<VertexId>, VariateSource)> {
        let i = self.step;
        let out = match self.mode {
            ScheduleMode::Independent => {
                let seeds = self.fresh_seeds(self.batch_size, &[tag::BATCH, i])?;
                (
                    seeds,
                    VariateSource::plain(mix(self.seed, &[tag::BATCH, i, 1])),
                )
            }
            ScheduleMode::Smoothed => {
                let seeds = self.fresh_seeds(self.batch_size, &[tag::BATCH, i])?;
                let source = self.smooth.source();
                self.smooth = self.smooth.advance();
                (seeds, source)
            }
            ScheduleMode::Nested => {
                let k = self.kappa.get().expect("checked in new");
                let (group, pos) = (i / k, (i % k) as usize);
                if pos == 0 {
                    self.super_batch =
                        self.fresh_seeds(k as usize * self.batch_size, &[tag::SUPER, group])?;
                    self.super_source =
                        VariateSource::plain(mix(self.seed, &[tag::SUPER, group, 1]));
                }
                let b = self.batch_size;
                (
                    self.super_batch[pos * b..(pos + 1) * b].to_vec(),
                    self.super_source,
                )
            }
        };
        self.step += 1;
        Ok(out)
    }
}

/// A super-batch expansion and its `κ` sub-batch expansions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedBatches {
    pub super_stack: LayerStack,
    pub subs: Vec<LayerStack>,
}

/// Splits `super_seeds` into `kappa` consecutive batches of `batch_size` and
/// expands each with the super-batch's `source`. Containment of every
/// sub-batch layer in the super-batch layer is checked.
pub fn nested_batches(
    g: &Graph,
    super_seeds: &[VertexId],
    kappa: usize,
    batch_size: usize,
    num_layers: usize,
    cfg: &SamplerConfig,
    source: &VariateSource,
) -> Result<NestedBatches> {
    if kappa == 0 || super_seeds.len() != kappa * batch_size {
        return Err(Error::input(format!(
            "super-batch has {} seeds, expected {kappa} x {batch_size}",
            super_seeds.len()
        )));
    }
    let super_stack = expand(g, super_seeds, num_layers, cfg, source)?;
    let subs = super_seeds
        .chunks(batch_size.max(1))
        .map(|chunk| expand(g, chunk, num_layers, cfg, source))
        .collect::<Result<Vec<_>>>()?;
    for l in 0..=num_layers {
        let whole: rustc_hash::FxHashSet<VertexId> =
            super_stack.layer_vertices(l).iter().copied().collect();
        let mut covered = rustc_hash::FxHashSet::default();
        for sub in &subs {
            for v in sub.layer_vertices(l) {
                if !whole.contains(v) {
                    return Err(Error::contract(format!(
                        "sub-batch vertex {v} missing from super-batch layer {l}"
                    )));
                }
                covered.insert(*v);
            }
        }
        if covered.len() != whole.len() {
            return Err(Error::contract(format!(
                "sub-batches do not cover super-batch layer {l}"
            )));
        }
    }
    Ok(NestedBatches { super_stack, subs })
}

/// Fixed parameters of a dependent-minibatch cache experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub sampler: SamplerConfig,
    pub num_layers: usize,
    pub capacity: usize,
    pub steps: usize,
    /// Leading steps excluded from [`steady_miss_rate`].
    pub warmup: usize,
    pub row_bytes: u64,
}

/// One step of [`run_dependent_experiment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependentRow {
    pub step: usize,
    pub warmup: bool,
    pub seeds: usize,
    /// `|S^L|` of this step.
    pub input_vertices: usize,
    pub hits: u64,
    pub misses: u64,
    pub miss_rate: f64,
    pub bytes: u64,
}

/// Runs `exp.steps` steps of `schedule`, loading each step's input layer
/// through a single LRU cache.
pub fn run_dependent_experiment(
    g: &Graph,
    schedule: &mut MinibatchSchedule,
    exp: &ExperimentConfig,
) -> Result<Vec<DependentRow>> {
    let mut cache = LruCache::new(exp.capacity)?;
    let mut rows = Vec::with_capacity(exp.steps);
    for step in 0..exp.steps {
        let (seeds, source) = schedule.next_batch()?;
        let stack = expand(g, &seeds, exp.num_layers, &exp.sampler, &source)?;
        let inputs = stack.input_vertices();
        let stats = feature_load_sim(
            &[inputs],
            std::slice::from_mut(&mut cache),
            None,
            exp.row_bytes,
        )?[0];
        rows.push(DependentRow {
            step,
            warmup: step < exp.warmup,
            seeds: seeds.len(),
            input_vertices: inputs.len(),
            hits: stats.hits,
            misses: stats.misses,
            miss_rate: stats.miss_rate(),
            bytes: stats.bytes,
        });
    }
    Ok(rows)
}

/// Aggregate miss rate over the rows after warmup.
pub fn steady_miss_rate(rows: &[DependentRow]) -> f64 {
    let (m, a) = rows
        .iter()
        .filter(|r| !r.warmup)
        .fold((0u64, 0u64), |(m, a), r| {
            (m + r.misses, a + r.hits + r.misses)
        });
    if a == 0 {
        0.0
    } else {
        m as f64 / a as f64
    }
}

/// Mean Jaccard distance between each vertex's one-layer sampled
/// neighborhood at the schedule's current iteration and `distance`
/// iterations later.
pub fn neighborhood_drift(
    g: &Graph,
    vertices: &[VertexId],
    cfg: &SamplerConfig,
    schedule: SeedSchedule,
    distance: u64,
) -> Result<f64> {
    let mut later = schedule;
    for _ in 0..distance {
        later = later.advance();
    }
    let (a_src, b_src) = (schedule.source(), later.source());
    let mut total = 0.0;
    let mut counted = 0usize;
    for &v in vertices {
        let a = sample_layer(g, &[v], cfg, &a_src)?;
        let b = sample_layer(g, &[v], cfg, &b_src)?;
        let sa: rustc_hash::FxHashSet<VertexId> = a.src_vertices()[1..].iter().copied().collect();
        let sb: rustc_hash::FxHashSet<VertexId> = b.src_vertices()[1..].iter().copied().collect();
        let union = sa.union(&sb).count();
        if union > 0 {
            let inter = sa.intersection(&sb).count();
            total += (union - inter) as f64 / union as f64;
            counted += 1;
        }
    }
    Ok(if counted == 0 {
        0.0
    } else {
        total / counted as f64
    })
}
