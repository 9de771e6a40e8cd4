use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coopbatch_core::analysis::SeedMode;
use coopbatch_core::cache::ScheduleMode;
use coopbatch_core::partition::Partitioner;
use coopbatch_core::{Kappa, SamplerConfig, SamplerKind};

#[derive(Debug, Parser)]
#[command(
    name = "coopbatch",
    version,
    about = "Minibatch construction experiments for GNN training"
)]
pub struct Cli {
    /// Global seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic power-law graph to a file.
    Generate(GenerateArgs),
    /// Sampled input-layer size as a function of batch size.
    Curve(CurveArgs),
    /// Cooperative or independent training steps on simulated PEs.
    Run(RunArgs),
    /// LRU cache behavior under dependent minibatches.
    Cache(CacheArgs),
    /// Exact leave-one-out identities on a small graph.
    Verify(VerifyArgs),
    /// Per-stage modeled times for independent and cooperative training.
    Cost(CostArgs),
    /// Partition a graph and report its cross-edge ratio.
    Partition(PartitionArgs),
}

/// Parameters of `--generate`, written as `n=..,deg=..[,skew=..][,directed=true]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub deg: f64,
    pub skew: f64,
    pub directed: bool,
}

impl FromStr for GenSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut spec = GenSpec {
            n: 0,
            deg: 0.0,
            skew: 0.6,
            directed: false,
        };
        let (mut has_n, mut has_deg) = (false, false);
        for part in s.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let bad = || format!("invalid value `{v}` for `{k}`");
            match k.trim() {
                "n" => {
                    spec.n = v.parse().map_err(|_| bad())?;
                    has_n = true;
                }
                "deg" => {
                    spec.deg = v.parse().map_err(|_| bad())?;
                    has_deg = true;
                }
                "skew" => spec.skew = v.parse().map_err(|_| bad())?,
                "directed" => spec.directed = v.parse().map_err(|_| bad())?,
                other => return Err(format!("unknown generator key `{other}`")),
            }
        }
        if !(has_n && has_deg) {
            return Err("generator needs both n= and deg=".into());
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Edge list (`src dst [weight]` per line) or binary CSR file.
    #[arg(
        long,
        conflicts_with = "generate",
        required_unless_present = "generate"
    )]
    pub graph: Option<PathBuf>,

    /// Synthetic graph, e.g. `n=100000,deg=10,skew=0.6`. Symmetrized unless
    /// `directed=true`.
    #[arg(long)]
    pub generate: Option<GenSpec>,

    /// Vertex count for edge lists whose highest ids are isolated.
    #[arg(long, requires = "graph")]
    pub num_vertices: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplerArg {
    Ns,
    Labor0,
    Rw,
    Full,
}

impl From<SamplerArg> for SamplerKind {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Ns => SamplerKind::Ns,
            SamplerArg::Labor0 => SamplerKind::Labor0,
            SamplerArg::Rw => SamplerKind::Rw,
            SamplerArg::Full => SamplerKind::Full,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SamplerArgs {
    #[arg(long, value_enum, default_value_t = SamplerArg::Labor0)]
    pub sampler: SamplerArg,
    /// Fanout k.
    #[arg(long, default_value_t = 10)]
    pub fanout: usize,
    /// Number of sampled layers L.
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    /// Random-walk length.
    #[arg(long, default_value_t = 3)]
    pub rw_length: usize,
    /// Random-walk restart probability.
    #[arg(long, default_value_t = 0.5)]
    pub rw_restart: f64,
    /// Walks per seed.
    #[arg(long, default_value_t = 100)]
    pub rw_walks: usize,
}

impl SamplerArgs {
    pub fn config(&self) -> SamplerConfig {
        SamplerConfig {
            kind: self.sampler.into(),
            fanout: self.fanout,
            rw_length: self.rw_length,
            rw_restart: self.rw_restart,
            rw_walks: self.rw_walks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PartitionerArg {
    Random,
    Locality,
}

impl From<PartitionerArg> for Partitioner {
    fn from(p: PartitionerArg) -> Self {
        match p {
            PartitionerArg::Random => Partitioner::Random,
            PartitionerArg::Locality => Partitioner::Locality,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgsCommon {
    /// Number of simulated PEs.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub parts: u32,
    #[arg(long, value_enum, default_value_t = PartitionerArg::Random)]
    pub partitioner: PartitionerArg,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n: usize,
    /// Average degree.
    #[arg(long)]
    pub deg: f64,
    #[arg(long, default_value_t = 0.6)]
    pub skew: f64,
    /// Keep the generated arcs as they are instead of symmetrizing.
    #[arg(long)]
    pub directed: bool,
    /// Write the binary CSR format instead of an edge list.
    #[arg(long)]
    pub binary: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    /// Batch sizes, strictly increasing.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "64,128,256,512,1024,2048,4096,8192"
    )]
    pub batch_sizes: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, value_parser = SeedMode::from_str, default_value = "node")]
    pub seed_mode: SeedMode,
    /// Exit with status 1 if the monotonicity or concavity check fails.
    #[arg(long)]
    pub check: bool,
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RunMode {
    Coop,
    Indep,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub partition: PartitionArgsCommon,
    #[arg(long, value_enum, default_value_t = RunMode::Coop)]
    pub mode: RunMode,
    /// Global batch size.
    #[arg(long, default_value_t = 1024)]
    pub batch: usize,
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Dependency between consecutive batches (positive integer or `inf`).
    #[arg(long, value_parser = Kappa::from_str, default_value = "1")]
    pub kappa: Kappa,
    /// Feature and hidden width.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Bytes charged per feature scalar.
    #[arg(long, default_value_t = 4)]
    pub bytes_per_scalar: usize,
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct CacheArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[arg(long, value_parser = ScheduleMode::from_str, default_value = "smoothed")]
    pub mode: ScheduleMode,
    #[arg(long, value_parser = Kappa::from_str, default_value = "1")]
    pub kappa: Kappa,
    /// Cache capacity in vertices.
    #[arg(long)]
    pub capacity: usize,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    /// Leading steps excluded from the steady-state miss rate. Defaults to a
    /// fifth of the steps.
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 4)]
    pub bytes_per_scalar: usize,
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Seed set size.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Expansion depth.
    #[arg(long, default_value_t = 2)]
    pub l: usize,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Per-trial results.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CostArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub sampler: SamplerArgs,
    #[command(flatten)]
    pub partition: PartitionArgsCommon,
    /// Global batch size B.
    #[arg(long, default_value_t = 1024)]
    pub batch: usize,
    /// Trials averaged for the measured sizes.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Cross-PE bandwidth in bytes/s.
    #[arg(long, default_value_t = 600e9)]
    pub alpha: f64,
    /// Storage bandwidth in bytes/s.
    #[arg(long, default_value_t = 64e9)]
    pub beta: f64,
    /// PE memory bandwidth in bytes/s.
    #[arg(long, default_value_t = 2e12)]
    pub gamma: f64,
    /// Cross-edge ratio; measured from the partition when omitted.
    #[arg(long)]
    pub c: Option<f64>,
    /// Embedding width in bytes-weighted units.
    #[arg(long, default_value_t = 128.0)]
    pub d: f64,
    /// Cache miss rate.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub model_cost: f64,
    #[arg(long)]
    pub csv: PathBuf,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub partition: PartitionArgsCommon,
    #[arg(long)]
    pub csv: PathBuf,
}
