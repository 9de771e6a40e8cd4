use ndarray::Array2;
use rayon::prelude::*;

use super::model::{gcn_backward, gcn_forward, softmax_cross_entropy};
use super::{coop_sample, CoopSample, FeatureMatrix, FeatureStore, GcnModel, StepMetrics};
use crate::graph::{Graph, VertexId};
use crate::partition::PartitionMap;
use crate::rng::{mix, VariateSource};
use crate::samplers::SamplerConfig;
use crate::{Error, Result};

/// Everything a training step reads but does not own. The number of sampled
/// layers equals the model depth.
#[derive(Debug, Clone, Copy)]
pub struct TrainInputs<'a> {
    pub graph: &'a Graph,
    pub sampler: &'a SamplerConfig,
    pub source: VariateSource,
    pub model: &'a GcnModel,
    /// Class label of every vertex.
    pub labels: &'a [usize],
}

/// Result of one step. `grads[l]` matches `model.weights()[l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub loss: f64,
    pub grads: Vec<Array2<f64>>,
    pub metrics: StepMetrics,
}

/// Deterministic labels in `0..classes`.
pub fn synthetic_labels(num_vertices: usize, classes: usize, seed: u64) -> Vec<usize> {
    (0..num_vertices)
        .map(|v| (mix(seed, &[v as u64]) % classes as u64) as usize)
        .collect()
}

struct Pipeline {
    loss_sum: f64,
    num_seeds: usize,
    grads: Vec<Array2<f64>>,
    metrics: StepMetrics,
    bytes: u64,
}

fn labels_of(labels: &[usize], ids: &[VertexId]) -> Result<Vec<usize>> {
    ids.iter()
        .map(|&v| {
            labels
                .get(v as usize)
                .copied()
                .ok_or_else(|| Error::input(format!("no label for vertex {v}")))
        })
        .collect()
}

/// Sampling, feature loading, forward and backward over the PEs of `pm`.
/// Gradients are normalized by the total seed count and summed across PEs.
fn run(
    inputs: &TrainInputs<'_>,
    pm: &PartitionMap,
    per_pe_seeds: &[Vec<VertexId>],
    store: &FeatureStore,
) -> Result<Pipeline> {
    let model = inputs.model;
    let layers = model.num_layers();
    if store.dim() != model.input_dim() {
        return Err(Error::contract(format!(
            "features have width {}, model expects {}",
            store.dim(),
            model.input_dim()
        )));
    }
    let sample: CoopSample = coop_sample(
        inputs.graph,
        pm,
        per_pe_seeds,
        layers,
        inputs.sampler,
        &inputs.source,
    )?;
    let stacks = &sample.stacks;
    let w = model.weights();

    let mut owned_rows: Vec<Array2<f64>> = stacks
        .iter()
        .map(|s| store.peek(s.owned(layers)).map(FeatureMatrix::into_values))
        .collect::<Result<_>>()?;
    let mut layer_inputs: Vec<Vec<FeatureMatrix>> = vec![Vec::new(); layers];
    for l in (0..layers).rev() {
        let tilde = sample.exchanges[l].gather(&owned_rows)?;
        let fms: Vec<FeatureMatrix> = tilde
            .into_iter()
            .zip(stacks)
            .map(|(rows, s)| FeatureMatrix::new(s.blocks()[l].src_vertices().to_vec(), rows))
            .collect::<Result<_>>()?;
        owned_rows = fms
            .par_iter()
            .zip(stacks.par_iter())
            .map(|(fm, s)| {
                gcn_forward(&s.blocks()[l], fm, &w[l], model.activation(l))
                    .map(FeatureMatrix::into_values)
            })
            .collect::<Result<_>>()?;
        layer_inputs[l] = fms;
    }

    let num_seeds: usize = stacks.iter().map(|s| s.owned(0).len()).sum();
    let norm = num_seeds.max(1) as f64;
    let mut loss_sum = 0.0;
    let mut upstream = Vec::with_capacity(stacks.len());
    for (s, logits) in stacks.iter().zip(&owned_rows) {
        let (loss, grad) =
            softmax_cross_entropy(logits, &labels_of(inputs.labels, s.owned(0))?, norm)?;
        loss_sum += loss;
        upstream.push(grad);
    }

    let mut grads = Vec::with_capacity(layers);
    for l in 0..layers {
        let parts: Vec<(Array2<f64>, Array2<f64>)> = stacks
            .par_iter()
            .zip(layer_inputs[l].par_iter())
            .zip(upstream.par_iter())
            .map(|((s, fm), g)| gcn_backward(&s.blocks()[l], fm, &w[l], model.activation(l), g))
            .collect::<Result<_>>()?;
        let mut gw = Array2::zeros(w[l].raw_dim());
        for (_, part) in &parts {
            gw += part;
        }
        grads.push(gw);
        if l + 1 < layers {
            let tilde: Vec<Array2<f64>> = parts.into_iter().map(|(gh, _)| gh).collect();
            upstream = sample.exchanges[l].scatter_add(&tilde)?;
        }
    }

    let metrics = StepMetrics::for_coop(&sample, store.row_bytes());
    let bytes = metrics.total_feat_bytes();
    Ok(Pipeline {
        loss_sum,
        num_seeds,
        grads,
        metrics,
        bytes,
    })
}

/// One cooperative step: loss is the mean over all seeds of all PEs and the
/// gradient is the sum of per-PE contributions.
pub fn coop_train_step(
    inputs: &TrainInputs<'_>,
    pm: &PartitionMap,
    per_pe_seeds: &[Vec<VertexId>],
    store: &mut FeatureStore,
) -> Result<StepOutput> {
    let out = run(inputs, pm, per_pe_seeds, store)?;
    if out.num_seeds == 0 {
        return Err(Error::input("empty minibatch"));
    }
    store.charge(out.bytes);
    let loss = out.loss_sum / out.num_seeds as f64;
    let mut metrics = out.metrics;
    metrics.loss = loss;
    Ok(StepOutput {
        loss,
        grads: out.grads,
        metrics,
    })
}

/// One independent step: every PE trains on its own stack without any
/// exchange; losses and gradients are averaged over PEs that had seeds.
pub fn indep_train_step(
    inputs: &TrainInputs<'_>,
    per_pe_seeds: &[Vec<VertexId>],
    store: &mut FeatureStore,
) -> Result<StepOutput> {
    let single = PartitionMap::single(inputs.graph.num_vertices());
    let frozen: &FeatureStore = store;
    let outs: Vec<Pipeline> = per_pe_seeds
        .par_iter()
        .map(|seeds| run(inputs, &single, std::slice::from_ref(seeds), frozen))
        .collect::<Result<_>>()?;
    let active: Vec<&Pipeline> = outs.iter().filter(|o| o.num_seeds > 0).collect();
    if active.is_empty() {
        return Err(Error::input("empty minibatch"));
    }
    let scale = 1.0 / active.len() as f64;
    let loss = active
        .iter()
        .map(|o| o.loss_sum / o.num_seeds as f64)
        .sum::<f64>()
        * scale;
    let mut grads: Vec<Array2<f64>> = inputs
        .model
        .weights()
        .iter()
        .map(|w| Array2::zeros(w.raw_dim()))
        .collect();
    for o in &active {
        for (acc, g) in grads.iter_mut().zip(&o.grads) {
            acc.scaled_add(scale, g);
        }
    }
    let mut metrics = StepMetrics {
        rows: Vec::new(),
        loss,
    };
    for (p, o) in outs.iter().enumerate() {
        store.charge(o.bytes);
        metrics.rows.extend(
            o.metrics
                .rows
                .iter()
                .map(|r| super::LayerMetrics { pe: p, ..*r }),
        );
    }
    Ok(StepOutput {
        loss,
        grads,
        metrics,
    })
}
