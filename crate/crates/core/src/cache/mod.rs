//! LRU feature-cache simulation and dependent minibatch schedules.

mod schedule;

use std::num::NonZeroUsize;

pub use schedule::{
    neighborhood_drift, nested_batches, run_dependent_experiment, steady_miss_rate, DependentRow,
    ExperimentConfig, MinibatchSchedule, NestedBatches, ScheduleMode,
};

use crate::graph::VertexId;
use crate::partition::PartitionMap;
use crate::{Error, Result};

/// Outcome of one cache lookup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Hit,
    Miss,
}

/// Fixed-capacity least-recently-used set of vertex ids with hit and miss
/// counters.
#[derive(Debug)]
pub struct LruCache {
    inner: lru::LruCache<VertexId, ()>,
    hits: u64,
    misses: u64,
}

impl LruCache {
    pub fn new(capacity: usize) -> Result<Self> {
        let cap = NonZeroUsize::new(capacity)
            .ok_or_else(|| Error::input("cache capacity must be at least 1"))?;
        Ok(LruCache {
            inner: lru::LruCache::new(cap),
            hits: 0,
            misses: 0,
        })
    }

    /// A hit promotes `key` to most recent; a miss inserts it, evicting the
    /// least recent entry when full.
    pub fn access(&mut self, key: VertexId) -> Access {
        if self.inner.get(&key).is_some() {
            self.hits += 1;
            Access::Hit
        } else {
            self.inner.put(key, ());
            self.misses += 1;
            Access::Miss
        }
    }

    pub fn capacity(&self) -> usize {
        self.inner.cap().get()
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn contains(&self, key: VertexId) -> bool {
        self.inner.contains(&key)
    }

    /// Resident keys, most recent first.
    pub fn resident(&self) -> Vec<VertexId> {
        self.inner.iter().map(|(k, _)| *k).collect()
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn accesses(&self) -> u64 {
        self.hits + self.misses
    }

    /// `misses / accesses`, or 0 before the first access.
    pub fn miss_rate(&self) -> f64 {
        ratio(self.misses, self.accesses())
    }

    /// Zeroes the counters but keeps the resident set.
    pub fn reset_counters(&mut self) {
        self.hits = 0;
        self.misses = 0;
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Counters of one feature-loading round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    /// Bytes fetched from storage: misses times the row size.
    pub bytes: u64,
}

impl CacheStats {
    pub fn accesses(&self) -> u64 {
        self.hits + self.misses
    }

    pub fn miss_rate(&self) -> f64 {
        ratio(self.misses, self.accesses())
    }

    pub fn merge(self, other: CacheStats) -> CacheStats {
        CacheStats {
            hits: self.hits + other.hits,
            misses: self.misses + other.misses,
            bytes: self.bytes + other.bytes,
        }
    }
}

/// Feeds each PE's input vertices through its own cache. With `pm`, PE `p`
/// only looks up vertices it owns; rows owned elsewhere arrive through the
/// exchange instead of storage.
pub fn feature_load_sim(
    inputs: &[&[VertexId]],
    caches: &mut [LruCache],
    pm: Option<&PartitionMap>,
    row_bytes: u64,
) -> Result<Vec<CacheStats>> {
    if inputs.len() != caches.len() {
        return Err(Error::input(format!(
            "{} input lists for {} caches",
            inputs.len(),
            caches.len()
        )));
    }
    if let Some(pm) = pm {
        if pm.num_parts() != caches.len() {
            return Err(Error::input(format!(
                "{} caches for {} PEs",
                caches.len(),
                pm.num_parts()
            )));
        }
    }
    Ok(inputs
        .iter()
        .zip(caches.iter_mut())
        .enumerate()
        .map(|(p, (ids, cache))| {
            let mut stats = CacheStats::default();
            for &v in ids.iter() {
                if pm.is_some_and(|pm| pm.owner(v) != p) {
                    continue;
                }
                match cache.access(v) {
                    Access::Hit => stats.hits += 1,
                    Access::Miss => stats.misses += 1,
                }
            }
            stats.bytes = stats.misses * row_bytes;
            stats
        })
        .collect())
}
