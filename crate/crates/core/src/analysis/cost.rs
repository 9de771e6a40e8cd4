use std::fmt;

use crate::coop::StepMetrics;
use crate::{Error, Result};

/// Hardware and workload constants of the cost model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Cross-PE bandwidth, bytes per second.
    pub alpha: f64,
    /// Storage-to-PE bandwidth, bytes per second.
    pub beta: f64,
    /// PE memory bandwidth, bytes per second.
    pub gamma: f64,
    /// Cross-edge ratio.
    pub c: f64,
    /// Embedding dimension.
    pub d: f64,
    /// Cache miss rate.
    pub rho: f64,
    /// Work per vertex or edge of a bipartite layer.
    pub model_cost: f64,
    pub parts: usize,
}

impl CostParams {
    /// Four-PE system with 600 GB/s links, 64 GB/s storage and 2 TB/s memory.
    pub fn reference_system(c: f64, d: f64, rho: f64) -> Self {
        CostParams {
            alpha: 600e9,
            beta: 64e9,
            gamma: 2e12,
            c,
            d,
            rho,
            model_cost: 1.0,
            parts: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("d", self.d),
            ("model cost", self.model_cost),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::input(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("c", self.c), ("rho", self.rho)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::input(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if self.parts == 0 {
            return Err(Error::input("PE count must be positive"));
        }
        Ok(())
    }
}

/// Per-PE sizes of one minibatch: `s[l] = |S^l_p|` and `s_tilde[l] =
/// |S̃^l_p|` for `l = 0..=L`, `e[l] = |E^l_p|` for `l = 0..L`. For
/// independent minibatching `s_tilde` equals `s`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LayerSizes {
    pub s: Vec<f64>,
    pub s_tilde: Vec<f64>,
    pub e: Vec<f64>,
}

impl LayerSizes {
    pub fn num_layers(&self) -> usize {
        self.e.len()
    }

    fn validate(&self) -> Result<()> {
        let l = self.e.len();
        if l == 0 || self.s.len() != l + 1 || self.s_tilde.len() != l + 1 {
            return Err(Error::input(
                "layer sizes need L edge counts and L + 1 vertex counts",
            ));
        }
        if self
            .s
            .iter()
            .chain(&self.s_tilde)
            .chain(&self.e)
            .any(|x| !(x.is_finite() && *x >= 0.0))
        {
            return Err(Error::input("layer sizes must be finite and nonnegative"));
        }
        Ok(())
    }

    /// Per-PE means of a step's metrics.
    pub fn from_metrics(m: &StepMetrics) -> Self {
        let parts = m.num_parts().max(1) as f64;
        let layers = m.rows.iter().map(|r| r.layer).max().unwrap_or(0);
        let mut out = LayerSizes {
            s: vec![0.0; layers + 1],
            s_tilde: vec![0.0; layers + 1],
            e: vec![0.0; layers],
        };
        for r in &m.rows {
            out.s[r.layer] += r.s_l as f64 / parts;
            out.s_tilde[r.layer] += r.s_tilde_l as f64 / parts;
            if r.layer < layers {
                out.e[r.layer] += r.e_l as f64 / parts;
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sampling,
    FeatureLoading,
    ForwardBackward,
}

impl Stage {
    pub const ALL: [Stage; 3] = [
        Stage::Sampling,
        Stage::FeatureLoading,
        Stage::ForwardBackward,
    ];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Sampling => "sampling",
            Stage::FeatureLoading => "feature_loading",
            Stage::ForwardBackward => "forward_backward",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Independent,
    Cooperative,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Independent => "indep",
            Mode::Cooperative => "coop",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageCost {
    pub stage: Stage,
    pub mode: Mode,
    /// Modeled time in seconds with unit constants.
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub rows: Vec<StageCost>,
}

impl CostReport {
    pub fn get(&self, stage: Stage, mode: Mode) -> f64 {
        self.rows
            .iter()
            .find(|r| r.stage == stage && r.mode == mode)
            .map_or(0.0, |r| r.time)
    }

    pub fn total(&self, mode: Mode) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.mode == mode)
            .map(|r| r.time)
            .sum()
    }
}

/// Evaluates the per-stage complexity expressions, summed over layers.
/// `indep` holds the sizes of one PE's local batch of `B / P` seeds and
/// `coop` one PE's share of the global batch `B`. With a single PE nothing
/// crosses PEs, so the cross-edge ratio is treated as zero.
pub fn cost_estimate(p: &CostParams, indep: &LayerSizes, coop: &LayerSizes) -> Result<CostReport> {
    p.validate()?;
    indep.validate()?;
    coop.validate()?;
    if indep.num_layers() != coop.num_layers() {
        return Err(Error::input(
            "independent and cooperative sizes have different depths",
        ));
    }
    let layers = indep.num_layers();
    let c = if p.parts == 1 { 0.0 } else { p.c };
    let bipartite = |s: &LayerSizes, l: usize, next: f64| p.model_cost * (s.s[l] + s.e[l] + next);

    let mut rows = Vec::with_capacity(6);
    let sampling_i: f64 = (0..layers).map(|l| indep.s[l] / p.beta).sum();
    let sampling_c: f64 = (0..layers)
        .map(|l| coop.s[l] / p.beta + coop.s_tilde[l + 1] * c / p.alpha)
        .sum();
    let load_i = indep.s[layers] * p.d * p.rho / p.beta;
    let load_c = coop.s[layers] * p.d * p.rho / p.beta + coop.s_tilde[layers] * p.d * c / p.alpha;
    let fb_i: f64 = (0..layers)
        .map(|l| bipartite(indep, l, indep.s[l + 1]) * p.d / p.gamma)
        .sum();
    let fb_c: f64 = (0..layers)
        .map(|l| {
            bipartite(coop, l, coop.s_tilde[l + 1]) * p.d / p.gamma
                + coop.s_tilde[l + 1] * p.d * c / p.alpha
        })
        .sum();
    for (stage, i, co) in [
        (Stage::Sampling, sampling_i, sampling_c),
        (Stage::FeatureLoading, load_i, load_c),
        (Stage::ForwardBackward, fb_i, fb_c),
    ] {
        rows.push(StageCost {
            stage,
            mode: Mode::Independent,
            time: i,
        });
        rows.push(StageCost {
            stage,
            mode: Mode::Cooperative,
            time: co,
        });
    }
    Ok(CostReport { rows })
}
