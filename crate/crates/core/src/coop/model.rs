use ndarray::{Array2, Axis};

use crate::graph::VertexId;
use crate::rng::{hash_uniform, std_normal};
use crate::samplers::BipartiteBlock;
use crate::{Error, Result};

/// Dense rows keyed by vertex id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<VertexId>,
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(ids: Vec<VertexId>, values: Array2<f64>) -> Result<Self> {
        if ids.len() != values.nrows() {
            return Err(Error::contract(format!(
                "{} ids for {} feature rows",
                ids.len(),
                values.nrows()
            )));
        }
        Ok(FeatureMatrix { ids, values })
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Elementwise nonlinearity applied after the linear transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        if self == Activation::Tanh {
            z.mapv_inplace(f64::tanh);
        }
    }

    /// Multiplies `grad` by the derivative, given the activation output.
    fn backprop(self, out: &Array2<f64>, grad: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => grad.clone(),
            Activation::Tanh => grad * &out.mapv(|y| 1.0 - y * y),
        }
    }
}

/// In-memory feature table with a byte counter for every row read.
#[derive(Debug, Clone)]
pub struct FeatureStore {
    values: Array2<f64>,
    bytes_per_scalar: usize,
    bytes_loaded: u64,
}

impl FeatureStore {
    pub fn new(values: Array2<f64>) -> Self {
        FeatureStore {
            values,
            bytes_per_scalar: 4,
            bytes_loaded: 0,
        }
    }

    /// Deterministic standard-normal features, one row per vertex.
    pub fn synthetic(num_vertices: usize, dim: usize, seed: u64) -> Self {
        let values = Array2::from_shape_fn((num_vertices, dim), |(v, j)| {
            std_normal(seed, &[v as u64, j as u64])
        });
        Self::new(values)
    }

    /// Bytes charged per loaded scalar (4 models single precision).
    pub fn with_bytes_per_scalar(mut self, bytes: usize) -> Self {
        self.bytes_per_scalar = bytes;
        self
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn num_vertices(&self) -> usize {
        self.values.nrows()
    }

    pub fn row_bytes(&self) -> u64 {
        (self.dim() * self.bytes_per_scalar) as u64
    }

    pub fn bytes_loaded(&self) -> u64 {
        self.bytes_loaded
    }

    /// Reads rows without touching the counter.
    pub fn peek(&self, ids: &[VertexId]) -> Result<FeatureMatrix> {
        let mut out = Array2::zeros((ids.len(), self.dim()));
        for (i, &v) in ids.iter().enumerate() {
            if v as usize >= self.num_vertices() {
                return Err(Error::VertexOutOfRange {
                    vertex: v as u64,
                    num_vertices: self.num_vertices(),
                });
            }
            out.row_mut(i).assign(&self.values.row(v as usize));
        }
        FeatureMatrix::new(ids.to_vec(), out)
    }

    /// Adds `bytes` to the counter for rows read through [`FeatureStore::peek`].
    pub fn charge(&mut self, bytes: u64) {
        self.bytes_loaded += bytes;
    }

    pub fn load(&mut self, ids: &[VertexId]) -> Result<FeatureMatrix> {
        let m = self.peek(ids)?;
        self.bytes_loaded += ids.len() as u64 * self.row_bytes();
        Ok(m)
    }
}

/// Per-layer weights of the toy GCN. `weights[l]` maps layer `l + 1`
/// embeddings to layer `l`; layer 0 produces class logits.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    weights: Vec<Array2<f64>>,
}

impl GcnModel {
    /// `dims[l]` is the width of layer `l`: `dims[0]` is the class count and
    /// `dims[L]` the input feature dimension. Glorot-uniform initialization.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::input(
                "model needs at least two positive layer widths",
            ));
        }
        let weights = (0..dims.len() - 1)
            .map(|l| {
                let (fan_in, fan_out) = (dims[l + 1], dims[l]);
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Array2::from_shape_fn((fan_in, fan_out), |(i, j)| {
                    a * (2.0 * hash_uniform(seed, &[l as u64, i as u64, j as u64]) - 1.0)
                })
            })
            .collect();
        Ok(GcnModel { weights })
    }

    pub fn from_weights(weights: Vec<Array2<f64>>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("model needs at least one layer"));
        }
        for l in 0..weights.len() - 1 {
            if weights[l].nrows() != weights[l + 1].ncols() {
                return Err(Error::contract(format!(
                    "weight {l} does not chain with weight {}",
                    l + 1
                )));
            }
        }
        Ok(GcnModel { weights })
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn input_dim(&self) -> usize {
        self.weights.last().map_or(0, |w| w.nrows())
    }

    pub fn num_classes(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn activation(&self, layer: usize) -> Activation {
        if layer == 0 {
            Activation::Identity
        } else {
            Activation::Tanh
        }
    }

    /// Plain gradient step `W -= lr * grad`.
    pub fn sgd_step(&mut self, grads: &[Array2<f64>], lr: f64) -> Result<()> {
        if grads.len() != self.weights.len() {
            return Err(Error::contract("gradient count differs from layer count"));
        }
        for (w, g) in self.weights.iter_mut().zip(grads) {
            if w.dim() != g.dim() {
                return Err(Error::contract("gradient shape differs from weight shape"));
            }
            w.scaled_add(-lr, g);
        }
        Ok(())
    }
}

fn in_counts(block: &BipartiteBlock) -> Vec<u32> {
    let mut c = vec![0u32; block.num_dst()];
    for &(_, d) in block.edges() {
        c[d as usize] += 1;
    }
    c
}

fn check_shapes(block: &BipartiteBlock, h_in: &FeatureMatrix, w: &Array2<f64>) -> Result<()> {
    if h_in.ids() != block.src_vertices() {
        return Err(Error::contract(
            "input rows do not align with the block's source vertices",
        ));
    }
    if h_in.dim() != w.nrows() {
        return Err(Error::contract(format!(
            "feature width {} against weight with {} rows",
            h_in.dim(),
            w.nrows()
        )));
    }
    Ok(())
}

/// Mean over sampled in-edges. A destination without sampled edges keeps its
/// own row; repeated edges count with multiplicity.
fn aggregate(block: &BipartiteBlock, h: &Array2<f64>, counts: &[u32]) -> Array2<f64> {
    let mut agg = Array2::zeros((block.num_dst(), h.ncols()));
    for &(s, d) in block.edges() {
        let mut row = agg.row_mut(d as usize);
        row.scaled_add(1.0 / counts[d as usize] as f64, &h.row(s as usize));
    }
    for (d, &c) in counts.iter().enumerate() {
        if c == 0 {
            agg.row_mut(d).assign(&h.row(d));
        }
    }
    agg
}

/// One GCN layer: mean aggregation, linear map, activation.
pub fn gcn_forward(
    block: &BipartiteBlock,
    h_in: &FeatureMatrix,
    w: &Array2<f64>,
    act: Activation,
) -> Result<FeatureMatrix> {
    check_shapes(block, h_in, w)?;
    let agg = aggregate(block, h_in.values(), &in_counts(block));
    let mut z = agg.dot(w);
    act.apply(&mut z);
    FeatureMatrix::new(block.dst_vertices().to_vec(), z)
}

/// Gradients of [`gcn_forward`] with respect to its input rows and weights.
pub fn gcn_backward(
    block: &BipartiteBlock,
    h_in: &FeatureMatrix,
    w: &Array2<f64>,
    act: Activation,
    grad_out: &Array2<f64>,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_shapes(block, h_in, w)?;
    if grad_out.dim() != (block.num_dst(), w.ncols()) {
        return Err(Error::contract(format!(
            "output gradient {:?}, expected {:?}",
            grad_out.dim(),
            (block.num_dst(), w.ncols())
        )));
    }
    let counts = in_counts(block);
    let agg = aggregate(block, h_in.values(), &counts);
    let mut out = agg.dot(w);
    act.apply(&mut out);
    let gz = act.backprop(&out, grad_out);
    let grad_w = agg.t().dot(&gz);
    let g_agg = gz.dot(&w.t());
    let mut grad_in = Array2::zeros(h_in.values().raw_dim());
    for &(s, d) in block.edges() {
        let mut row = grad_in.row_mut(s as usize);
        row.scaled_add(1.0 / counts[d as usize] as f64, &g_agg.row(d as usize));
    }
    for (d, &c) in counts.iter().enumerate() {
        if c == 0 {
            let mut row = grad_in.row_mut(d);
            row += &g_agg.row(d);
        }
    }
    Ok((grad_in, grad_w))
}

/// Summed softmax cross-entropy of `logits` against `labels`, and its
/// gradient scaled by `1 / normalizer`.
pub fn softmax_cross_entropy(
    logits: &Array2<f64>,
    labels: &[usize],
    normalizer: f64,
) -> Result<(f64, Array2<f64>)> {
    if labels.len() != logits.nrows() {
        return Err(Error::contract("label count differs from logit rows"));
    }
    let classes = logits.ncols();
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut total = 0.0;
    for (i, (row, &y)) in logits.axis_iter(Axis(0)).zip(labels).enumerate() {
        if y >= classes {
            return Err(Error::contract(format!("label {y} with {classes} classes")));
        }
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let exps = row.mapv(|x| (x - max).exp());
        let sum = exps.sum();
        total += sum.ln() + max - row[y];
        let mut g = grad.row_mut(i);
        g.assign(&(exps / sum));
        g[y] -= 1.0;
    }
    grad /= normalizer;
    Ok((total, grad))
}
