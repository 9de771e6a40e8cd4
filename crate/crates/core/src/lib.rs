//! Minibatch construction for graph neural network training.
//!
//! The crate covers the full pipeline needed to study how minibatch size and
//! minibatch dependency change the amount of work a GNN epoch performs:
//!
//! * [`graph`]: immutable in-neighbor CSR storage, synthetic power-law graphs, IO.
//! * [`rng`]: stateless counter-based variates and smoothed seed interpolation.
//! * [`samplers`]: neighbor sampling, LABOR-0, random walks and layer expansion.
//! * [`partition`]: 1D vertex partitioning and cross-edge metrics.
//! * [`coop`]: cooperative and independent minibatching on simulated PEs.
//! * [`cache`]: LRU feature-cache simulation and dependent minibatch schedules.
//! * [`analysis`]: work curves, concavity checks, exact attribution identities
//!   and the per-stage cost model.

pub mod analysis;
pub mod cache;
pub mod coop;
mod error;
pub mod graph;
pub mod partition;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
pub use graph::{Graph, VertexId};
pub use partition::PartitionMap;
pub use rng::{Kappa, SeedSchedule, VariateSource};
pub use samplers::{BipartiteBlock, LayerStack, SamplerConfig, SamplerKind};
