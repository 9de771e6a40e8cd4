//! Work curves, concavity checks, exact attribution identities and the
//! per-stage cost model.

mod cost;
mod identities;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use cost::{cost_estimate, CostParams, CostReport, LayerSizes, Mode, Stage, StageCost};
pub use identities::{
    unique_attribution, verify_identities, verify_seed_set, IdentityCheck, IdentityReport,
};

use crate::graph::Graph;
use crate::rng::{mix, VariateSource};
use crate::samplers::{
    edge_pred_seeds, expand, sample_edge_batch, sample_seed_vertices, SamplerConfig,
};
use crate::{Error, Result};

/// How a minibatch of size `b` turns into seed vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedMode {
    /// `b` distinct vertices.
    #[default]
    Node,
    /// `b` positive edges, each with one negative partner; the seeds are the
    /// distinct endpoints. Expects an undirected graph.
    Edge,
}

impl fmt::Display for SeedMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeedMode::Node => "node",
            SeedMode::Edge => "edge",
        })
    }
}

impl FromStr for SeedMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node" => Ok(SeedMode::Node),
            "edge" => Ok(SeedMode::Edge),
            other => Err(Error::input(format!("unknown seed mode `{other}`"))),
        }
    }
}

/// One batch size of a [`WorkCurve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub batch_size: usize,
    /// Mean `|S^L|` over trials.
    pub mean: f64,
    /// Standard error of `mean`.
    pub se: f64,
    /// Mean of `|S^L| / |S^0|` over trials.
    pub work_per_seed: f64,
    pub work_per_seed_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkCurve {
    pub points: Vec<CurvePoint>,
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Estimates `E[|S^L|]` and `E[|S^L|] / |S^0|` for every batch size.
/// Trials run in parallel; trial `t` at batch size `b` is keyed by
/// `(seed, b, t)`, so results do not depend on the thread count.
pub fn work_curve(
    g: &Graph,
    cfg: &SamplerConfig,
    batch_sizes: &[usize],
    trials: usize,
    num_layers: usize,
    seed: u64,
    mode: SeedMode,
) -> Result<WorkCurve> {
    if trials == 0 {
        return Err(Error::input("need at least one trial"));
    }
    if batch_sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("batch sizes must be strictly increasing"));
    }
    let limit = match mode {
        SeedMode::Node => g.num_vertices(),
        SeedMode::Edge => g.num_edges(),
    };
    if let Some(&b) = batch_sizes.iter().find(|&&b| b == 0 || b > limit) {
        return Err(Error::input(format!("batch size {b} outside 1..={limit}")));
    }
    let points = batch_sizes
        .iter()
        .map(|&b| {
            let samples: Vec<(f64, f64)> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let key = mix(seed, &[b as u64, t as u64]);
                    let source = VariateSource::plain(mix(key, &[1]));
                    let seeds = match mode {
                        SeedMode::Node => sample_seed_vertices(g.num_vertices(), b, key)?,
                        SeedMode::Edge => {
                            edge_pred_seeds(g, &sample_edge_batch(g, b, key)?, &source.reseeded(2))?
                        }
                    };
                    let stack = expand(g, &seeds, num_layers, cfg, &source)?;
                    let s = stack.input_vertices().len() as f64;
                    Ok((s, s / stack.seeds().len() as f64))
                })
                .collect::<Result<_>>()?;
            let (sizes, ratios): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
            let (mean, se) = mean_se(&sizes);
            let (work_per_seed, work_per_seed_se) = mean_se(&ratios);
            Ok(CurvePoint {
                batch_size: b,
                mean,
                se,
                work_per_seed,
                work_per_seed_se,
            })
        })
        .collect::<Result<_>>()?;
    Ok(WorkCurve { points })
}

impl WorkCurve {
    /// Indices `i` where work per seed rises from point `i` to `i + 1` by
    /// more than one pooled standard error.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| {
                let tol = (w[0].work_per_seed_se.powi(2) + w[1].work_per_seed_se.powi(2)).sqrt();
                w[1].work_per_seed - w[0].work_per_seed > tol
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Second divided differences of a curve and their tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityReport {
    /// `slope(i+1, i+2) - slope(i, i+1)` for each consecutive triple.
    pub second_diffs: Vec<f64>,
    /// Pooled standard error of each second difference.
    pub std_errors: Vec<f64>,
    /// Triples whose second difference exceeds two standard errors.
    pub violations: Vec<usize>,
}

impl ConcavityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that `E[|S^L|]` is concave in the batch size, allowing each
/// second difference up to `+2` pooled standard errors.
pub fn concavity_check(curve: &WorkCurve) -> Result<ConcavityReport> {
    let pts = &curve.points;
    if pts.len() < 3 {
        return Err(Error::input("concavity needs at least three batch sizes"));
    }
    let mut report = ConcavityReport {
        second_diffs: Vec::new(),
        std_errors: Vec::new(),
        violations: Vec::new(),
    };
    for (i, w) in pts.windows(3).enumerate() {
        let h0 = (w[1].batch_size - w[0].batch_size) as f64;
        let h1 = (w[2].batch_size - w[1].batch_size) as f64;
        let coeff = [1.0 / h0, -(1.0 / h0 + 1.0 / h1), 1.0 / h1];
        let diff = coeff[0] * w[0].mean + coeff[1] * w[1].mean + coeff[2] * w[2].mean;
        let se = coeff
            .iter()
            .zip(w)
            .map(|(c, p)| (c * p.se).powi(2))
            .sum::<f64>()
            .sqrt();
        if diff > 2.0 * se {
            report.violations.push(i);
        }
        report.second_diffs.push(diff);
        report.std_errors.push(se);
    }
    Ok(report)
}
