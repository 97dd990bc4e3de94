//! Deterministic forward pass of the hetGNN-LSTM forecaster.
//!
//! Each time slot runs per-relation graph convolutions (symmetric degree
//! normalization with self-loops) fused by sum or mean, stacked `L` deep.
//! The per-slot embedding sequence then feeds a stacked LSTM whose final
//! state projects to the `Q`-step demand/supply forecast of every node.
//!
//! Neighbor aggregation sums contributions in value order rather than index
//! order, which makes the arithmetic bitwise-invariant under node
//! relabeling and lets the distributed engines reproduce the centralized
//! output exactly. Matrix products are plain row-major loops for the same
//! reason: a row's bits depend only on that row's contents.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::hin::HINSnapshot;
use crate::{Error, Result};

/// How the three relation outputs combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Linear,
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub gnn_layers: usize,
    pub lstm_layers: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    pub hidden_dim: usize,
    /// Forecast steps produced by the output head.
    pub horizon: usize,
    pub aggregation: Aggregation,
    pub weight_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            gnn_layers: 3,
            lstm_layers: 10,
            input_dim: 216,
            output_dim: 216,
            hidden_dim: 64,
            horizon: 4,
            aggregation: Aggregation::Sum,
            weight_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gnn_layers == 0
            || self.lstm_layers == 0
            || self.input_dim == 0
            || self.output_dim == 0
            || self.hidden_dim == 0
            || self.horizon == 0
        {
            return Err(Error::InvalidConfig("model dimensions must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-layer convolution matrices, one per relation.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnLayerWeights {
    pub connectivity: Array2<f64>,
    pub proximity: Array2<f64>,
    pub destination: Array2<f64>,
}

/// Gate-stacked LSTM parameters: rows pack input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayerWeights {
    pub w_ih: Array2<f64>,
    pub w_hh: Array2<f64>,
    pub b_ih: Array1<f64>,
    pub b_hh: Array1<f64>,
}

/// All learned parameters of the forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub gnn: Vec<GnnLayerWeights>,
    pub lstm: Vec<LstmLayerWeights>,
    /// hidden_dim x (horizon * output_dim) projection.
    pub output: Array2<f64>,
}

fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..=limit))
}

/// Seeded Xavier-uniform initialization; the same seed always reproduces the
/// same bits.
pub fn init_weights(config: &ModelConfig) -> Result<WeightSet> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.weight_seed);
    let mut gnn = Vec::with_capacity(config.gnn_layers);
    for layer in 0..config.gnn_layers {
        let in_dim = if layer == 0 { config.input_dim } else { config.hidden_dim };
        gnn.push(GnnLayerWeights {
            connectivity: xavier(&mut rng, in_dim, config.hidden_dim),
            proximity: xavier(&mut rng, in_dim, config.hidden_dim),
            destination: xavier(&mut rng, in_dim, config.hidden_dim),
        });
    }
    let mut lstm = Vec::with_capacity(config.lstm_layers);
    for _ in 0..config.lstm_layers {
        lstm.push(LstmLayerWeights {
            w_ih: xavier(&mut rng, 4 * config.hidden_dim, config.hidden_dim),
            w_hh: xavier(&mut rng, 4 * config.hidden_dim, config.hidden_dim),
            b_ih: Array1::zeros(4 * config.hidden_dim),
            b_hh: Array1::zeros(4 * config.hidden_dim),
        });
    }
    let output = xavier(&mut rng, config.hidden_dim, config.horizon * config.output_dim);
    Ok(WeightSet { gnn, lstm, output })
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightFile {
    tensors: BTreeMap<String, TensorJson>,
}

fn tensor2(m: &Array2<f64>) -> TensorJson {
    TensorJson {
        shape: vec![m.nrows(), m.ncols()],
        data: m.iter().copied().collect(),
    }
}

fn tensor1(v: &Array1<f64>) -> TensorJson {
    TensorJson { shape: vec![v.len()], data: v.to_vec() }
}

fn from_tensor2(t: &TensorJson) -> Result<Array2<f64>> {
    if t.shape.len() != 2 || t.shape[0] * t.shape[1] != t.data.len() {
        return Err(Error::DimensionMismatch("bad tensor shape header".into()));
    }
    Array2::from_shape_vec((t.shape[0], t.shape[1]), t.data.clone())
        .map_err(|e| Error::DimensionMismatch(e.to_string()))
}

fn from_tensor1(t: &TensorJson) -> Result<Array1<f64>> {
    if t.shape.len() != 1 || t.shape[0] != t.data.len() {
        return Err(Error::DimensionMismatch("bad tensor shape header".into()));
    }
    Ok(Array1::from_vec(t.data.clone()))
}

impl WeightSet {
    /// Write as JSON of named tensors with shape headers.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut tensors = BTreeMap::new();
        for (l, layer) in self.gnn.iter().enumerate() {
            tensors.insert(format!("gnn.{l}.connectivity"), tensor2(&layer.connectivity));
            tensors.insert(format!("gnn.{l}.proximity"), tensor2(&layer.proximity));
            tensors.insert(format!("gnn.{l}.destination"), tensor2(&layer.destination));
        }
        for (l, layer) in self.lstm.iter().enumerate() {
            tensors.insert(format!("lstm.{l}.w_ih"), tensor2(&layer.w_ih));
            tensors.insert(format!("lstm.{l}.w_hh"), tensor2(&layer.w_hh));
            tensors.insert(format!("lstm.{l}.b_ih"), tensor1(&layer.b_ih));
            tensors.insert(format!("lstm.{l}.b_hh"), tensor1(&layer.b_hh));
        }
        tensors.insert("output".into(), tensor2(&self.output));
        let file = WeightFile { tensors };
        std::fs::write(path, serde_json::to_vec_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<WeightSet> {
        let file: WeightFile = serde_json::from_slice(&std::fs::read(path)?)?;
        let t = &file.tensors;
        let get = |name: &str| {
            t.get(name)
                .ok_or_else(|| Error::DimensionMismatch(format!("missing tensor {name}")))
        };
        let mut gnn = Vec::new();
        for l in 0.. {
            if !t.contains_key(&format!("gnn.{l}.connectivity")) {
                break;
            }
            gnn.push(GnnLayerWeights {
                connectivity: from_tensor2(get(&format!("gnn.{l}.connectivity"))?)?,
                proximity: from_tensor2(get(&format!("gnn.{l}.proximity"))?)?,
                destination: from_tensor2(get(&format!("gnn.{l}.destination"))?)?,
            });
        }
        let mut lstm = Vec::new();
        for l in 0.. {
            if !t.contains_key(&format!("lstm.{l}.w_ih")) {
                break;
            }
            lstm.push(LstmLayerWeights {
                w_ih: from_tensor2(get(&format!("lstm.{l}.w_ih"))?)?,
                w_hh: from_tensor2(get(&format!("lstm.{l}.w_hh"))?)?,
                b_ih: from_tensor1(get(&format!("lstm.{l}.b_ih"))?)?,
                b_hh: from_tensor1(get(&format!("lstm.{l}.b_hh"))?)?,
            });
        }
        Ok(WeightSet { gnn, lstm, output: from_tensor2(get("output")?)? })
    }
}

/// Normalized adjacency of one relation as per-row (neighbor, coefficient)
/// lists, self-loop included: coeff(i,j) = w_ij / sqrt(deg_i * deg_j) with
/// deg = weighted degree + 1. Degrees sum in value order so relabeling the
/// nodes cannot shift them by a rounding step.
pub(crate) fn normalized_relation(adj: &Array2<f64>) -> Vec<Vec<(usize, f64)>> {
    let n = adj.nrows();
    let mut buf = Vec::new();
    let deg: Vec<f64> = (0..n)
        .map(|i| {
            buf.clear();
            buf.push(1.0);
            buf.extend(adj.row(i).iter().copied().filter(|w| *w != 0.0));
            value_ordered_sum(&mut buf)
        })
        .collect();
    (0..n)
        .map(|i| {
            let mut row = Vec::new();
            for j in 0..n {
                let w = if i == j { 1.0 } else { adj[[i, j]] };
                if w != 0.0 {
                    row.push((j, w / (deg[i] * deg[j]).sqrt()));
                }
            }
            row
        })
        .collect()
}

pub(crate) struct NormalizedRelations {
    pub connectivity: Vec<Vec<(usize, f64)>>,
    pub proximity: Vec<Vec<(usize, f64)>>,
    pub destination: Vec<Vec<(usize, f64)>>,
}

pub(crate) fn normalize_snapshot(snapshot: &HINSnapshot) -> NormalizedRelations {
    NormalizedRelations {
        connectivity: normalized_relation(&snapshot.adj_connectivity),
        proximity: normalized_relation(&snapshot.adj_proximity),
        destination: normalized_relation(&snapshot.adj_destination),
    }
}

/// Sum in ascending value order: the result depends only on the multiset of
/// terms, never on their arrival order.
pub(crate) fn value_ordered_sum(terms: &mut Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    let mut acc = 0.0;
    for t in terms.iter() {
        acc += t;
    }
    acc
}

/// Plain row-major matrix product; each output row's bits depend only on the
/// corresponding input row.
pub(crate) fn matmul(h: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
    let (n, k) = h.dim();
    let m = w.ncols();
    debug_assert_eq!(k, w.nrows());
    let mut out = Array2::zeros((n, m));
    for i in 0..n {
        for c in 0..m {
            let mut acc = 0.0;
            for x in 0..k {
                acc += h[[i, x]] * w[[x, c]];
            }
            out[[i, c]] = acc;
        }
    }
    out
}

/// Aggregate projected messages along one normalized relation, skipping
/// neighbor terms the receiving site cannot see. `visible(i, j)` says
/// whether node i's compute site holds node j's current state; the self
/// term always passes. Dropped terms mark `dropped[i]`.
pub(crate) fn propagate_filtered(
    rel: &[Vec<(usize, f64)>],
    projected: &Array2<f64>,
    visible: &dyn Fn(usize, usize) -> bool,
    mut dropped: Option<&mut [bool]>,
) -> Array2<f64> {
    let n = rel.len();
    let h = projected.ncols();
    let mut out = Array2::zeros((n, h));
    let mut buf = Vec::new();
    for i in 0..n {
        for c in 0..h {
            buf.clear();
            for &(j, coeff) in &rel[i] {
                if j != i && !visible(i, j) {
                    if c == 0 {
                        if let Some(d) = dropped.as_deref_mut() {
                            d[i] = true;
                        }
                    }
                    continue;
                }
                buf.push(coeff * projected[[j, c]]);
            }
            out[[i, c]] = value_ordered_sum(&mut buf);
        }
    }
    out
}

/// Aggregate projected messages along one normalized relation.
pub(crate) fn propagate(rel: &[Vec<(usize, f64)>], projected: &Array2<f64>) -> Array2<f64> {
    propagate_filtered(rel, projected, &|_, _| true, None)
}

pub(crate) fn fuse_relations(
    parts: [Array2<f64>; 3],
    aggregation: Aggregation,
    activation: Activation,
) -> Array2<f64> {
    let [a, b, c] = parts;
    let mut out = a;
    out += &b;
    out += &c;
    if aggregation == Aggregation::Mean {
        out /= 3.0;
    }
    if activation == Activation::Relu {
        out.mapv_inplace(|v| v.max(0.0));
    }
    out
}

/// One heterogeneous convolution layer on a snapshot.
pub fn hetgnn_layer(
    snapshot: &HINSnapshot,
    h_in: &Array2<f64>,
    layer: &GnnLayerWeights,
    aggregation: Aggregation,
    activation: Activation,
) -> Result<Array2<f64>> {
    if h_in.nrows() != snapshot.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "embedding has {} rows for {} nodes",
            h_in.nrows(),
            snapshot.node_count()
        )));
    }
    if h_in.ncols() != layer.connectivity.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "embedding width {} does not match layer input {}",
            h_in.ncols(),
            layer.connectivity.nrows()
        )));
    }
    let rel = normalize_snapshot(snapshot);
    Ok(fuse_relations(
        [
            propagate(&rel.connectivity, &matmul(h_in, &layer.connectivity)),
            propagate(&rel.proximity, &matmul(h_in, &layer.proximity)),
            propagate(&rel.destination, &matmul(h_in, &layer.destination)),
        ],
        aggregation,
        activation,
    ))
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One LSTM step for a single node; `gates` scratch must be 4 * hidden wide.
pub(crate) fn lstm_step(
    layer: &LstmLayerWeights,
    x: &[f64],
    h: &mut [f64],
    c: &mut [f64],
    gates: &mut [f64],
) {
    let hd = h.len();
    for g in 0..4 * hd {
        let mut acc = layer.b_ih[g] + layer.b_hh[g];
        for (k, xv) in x.iter().enumerate() {
            acc += layer.w_ih[[g, k]] * xv;
        }
        for k in 0..hd {
            acc += layer.w_hh[[g, k]] * h[k];
        }
        gates[g] = acc;
    }
    for k in 0..hd {
        let i = sigmoid(gates[k]);
        let f = sigmoid(gates[hd + k]);
        let g = gates[2 * hd + k].tanh();
        let o = sigmoid(gates[3 * hd + k]);
        c[k] = f * c[k] + i * g;
        h[k] = o * c[k].tanh();
    }
}

/// Full GNN stack for one slot with a node-state visibility filter; tracks
/// which nodes lost at least one neighbor contribution.
pub(crate) fn gnn_stack_visible(
    rel: &NormalizedRelations,
    features: &Array2<f64>,
    config: &ModelConfig,
    weights: &WeightSet,
    visible: &dyn Fn(usize, usize) -> bool,
    dropped: &mut [bool],
) -> Array2<f64> {
    let mut h = features.clone();
    for (l, layer) in weights.gnn.iter().enumerate() {
        let activation = if l + 1 == config.gnn_layers { Activation::Linear } else { Activation::Relu };
        h = fuse_relations(
            [
                propagate_filtered(&rel.connectivity, &matmul(&h, &layer.connectivity), visible, Some(dropped)),
                propagate_filtered(&rel.proximity, &matmul(&h, &layer.proximity), visible, Some(dropped)),
                propagate_filtered(&rel.destination, &matmul(&h, &layer.destination), visible, Some(dropped)),
            ],
            config.aggregation,
            activation,
        );
    }
    h
}

/// Full GNN stack for one slot given prenormalized relations.
pub(crate) fn gnn_stack(
    rel: &NormalizedRelations,
    features: &Array2<f64>,
    config: &ModelConfig,
    weights: &WeightSet,
) -> Array2<f64> {
    let mut dropped = vec![false; features.nrows()];
    gnn_stack_visible(rel, features, config, weights, &|_, _| true, &mut dropped)
}

/// Run the stacked LSTM over per-slot embeddings and project the forecast.
/// `embeddings[t]` is the N x hidden matrix of slot t.
pub(crate) fn lstm_head(
    embeddings: &[Array2<f64>],
    config: &ModelConfig,
    weights: &WeightSet,
) -> Array3<f64> {
    let n = embeddings[0].nrows();
    let hd = config.hidden_dim;
    let q = config.horizon;
    let out_dim = config.output_dim;
    let mut predictions = Array3::zeros((q, n, out_dim));
    let mut gates = vec![0.0; 4 * hd];
    for node in 0..n {
        let mut hs = vec![vec![0.0; hd]; config.lstm_layers];
        let mut cs = vec![vec![0.0; hd]; config.lstm_layers];
        let mut input = vec![0.0; hd];
        for emb in embeddings {
            for k in 0..hd {
                input[k] = emb[[node, k]];
            }
            for (layer, w) in weights.lstm.iter().enumerate() {
                let (h, c) = (&mut hs[layer], &mut cs[layer]);
                lstm_step(w, &input, h, c, &mut gates);
                input.copy_from_slice(h);
            }
        }
        let top = &hs[config.lstm_layers - 1];
        for step in 0..q {
            for d in 0..out_dim {
                let col = step * out_dim + d;
                let mut acc = 0.0;
                for k in 0..hd {
                    acc += top[k] * weights.output[[k, col]];
                }
                predictions[[step, node, d]] = acc;
            }
        }
    }
    predictions
}

fn check_window(window: &[HINSnapshot], config: &ModelConfig) -> Result<()> {
    let first = window.first().ok_or_else(|| Error::EmptyInput("empty snapshot window".into()))?;
    for snap in window {
        if snap.node_count() != first.node_count()
            || snap
                .nodes
                .iter()
                .zip(&first.nodes)
                .any(|(a, b)| a.id != b.id)
        {
            return Err(Error::InconsistentWindow(
                "node ids differ across the window".into(),
            ));
        }
        if snap.features.ncols() != config.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "slot {} features are {} wide, model expects {}",
                snap.time_slot,
                snap.features.ncols(),
                config.input_dim
            )));
        }
    }
    Ok(())
}

/// Map a `P`-slot history window to the `horizon x N x output_dim` forecast.
pub fn forward(
    window: &[HINSnapshot],
    config: &ModelConfig,
    weights: &WeightSet,
) -> Result<Array3<f64>> {
    config.validate()?;
    check_window(window, config)?;
    let embeddings: Vec<Array2<f64>> = window
        .iter()
        .map(|snap| {
            let rel = normalize_snapshot(snap);
            gnn_stack(&rel, &snap.features, config, weights)
        })
        .collect();
    Ok(lstm_head(&embeddings, config, weights))
}

/// Forecast-quality metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse: f64,
    pub mae: f64,
    /// Mean absolute percentage error, in percent.
    pub mape: f64,
    /// Terms dropped from the MAPE mean because the truth entry was zero.
    pub mape_excluded: usize,
}

/// RMSE, MAE, and MAPE between truth and prediction. Zero-truth entries are
/// excluded from the MAPE mean, with the exclusion count reported.
pub fn metrics(truth: &[f64], prediction: &[f64]) -> Result<Metrics> {
    if truth.len() != prediction.len() {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} entries, prediction {}",
            truth.len(),
            prediction.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput("metrics on empty vectors".into()));
    }
    let n = truth.len() as f64;
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut pct = 0.0;
    let mut pct_terms = 0usize;
    for (x, xh) in truth.iter().zip(prediction) {
        let e = x - xh;
        sq += e * e;
        abs += e.abs();
        if *x != 0.0 {
            pct += (e / x).abs();
            pct_terms += 1;
        }
    }
    Ok(Metrics {
        rmse: (sq / n).sqrt(),
        mae: abs / n,
        mape: if pct_terms == 0 { 0.0 } else { 100.0 * pct / pct_terms as f64 },
        mape_excluded: truth.len() - pct_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hin::{build_snapshot, GraphConfig, Point2, TaxiNode};
    use rand::Rng;

    fn small_config(input_dim: usize) -> ModelConfig {
        ModelConfig {
            gnn_layers: 2,
            lstm_layers: 2,
            input_dim,
            output_dim: input_dim,
            hidden_dim: 8,
            horizon: 2,
            aggregation: Aggregation::Sum,
            weight_seed: 42,
        }
    }

    fn random_snapshot(n: usize, width: usize, seed: u64, t: i64) -> HINSnapshot {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes: Vec<TaxiNode> = (0..n)
            .map(|id| {
                let mut node = TaxiNode::new(
                    id as u64,
                    Point2::new(rng.gen::<f64>() * 300.0, rng.gen::<f64>() * 300.0),
                    Point2::new(rng.gen::<f64>() * 300.0, rng.gen::<f64>() * 300.0),
                );
                node.features = (0..width).map(|_| rng.gen::<f64>() - 0.5).collect();
                node
            })
            .collect();
        build_snapshot(nodes, &GraphConfig::default(), t).unwrap()
    }

    #[test]
    fn same_seed_same_weights() {
        let config = small_config(6);
        let a = init_weights(&config).unwrap();
        let b = init_weights(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unit_hidden_dim_still_runs() {
        let config = ModelConfig { hidden_dim: 1, ..small_config(3) };
        let weights = init_weights(&config).unwrap();
        let window = vec![random_snapshot(4, 3, 1, 0)];
        let out = forward(&window, &config, &weights).unwrap();
        assert_eq!(out.dim(), (2, 4, 3));
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn weight_file_round_trips_bitwise() {
        let config = small_config(5);
        let weights = init_weights(&config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("weights.json");
        weights.save(&path).unwrap();
        let loaded = WeightSet::load(&path).unwrap();
        assert_eq!(weights, loaded);
        // Save the loaded copy again: files identical byte for byte.
        let path2 = dir.path().join("weights2.json");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(path).unwrap(), std::fs::read(path2).unwrap());
    }

    #[test]
    fn isolated_nodes_see_only_their_self_loop() {
        // All-zero adjacency: output row i = act(x_i W / deg) with deg 1.
        let mut snap = random_snapshot(3, 4, 5, 0);
        snap.adj_connectivity.fill(0.0);
        snap.adj_proximity.fill(0.0);
        snap.adj_destination.fill(0.0);
        let config = small_config(4);
        let weights = init_weights(&config).unwrap();
        let layer = &weights.gnn[0];
        let out = hetgnn_layer(&snap, &snap.features.clone(), layer, Aggregation::Sum, Activation::Linear)
            .unwrap();
        let expect = {
            let mut parts = matmul(&snap.features, &layer.connectivity);
            parts += &matmul(&snap.features, &layer.proximity);
            parts += &matmul(&snap.features, &layer.destination);
            parts
        };
        for i in 0..3 {
            for c in 0..8 {
                assert!((out[[i, c]] - expect[[i, c]]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn layer_matches_scalar_brute_force_on_a_line_graph() {
        // Four nodes in a line via proximity only; hand-evaluated dense oracle.
        let mut nodes: Vec<TaxiNode> = (0..4)
            .map(|id| TaxiNode::new(id, Point2::new(id as f64 * 90.0, 0.0), Point2::new(1e5 * id as f64, 0.0)))
            .collect();
        for (i, node) in nodes.iter_mut().enumerate() {
            node.features = vec![i as f64 + 1.0, -(i as f64)];
        }
        let snap = build_snapshot(nodes, &GraphConfig::default(), 0).unwrap();
        let w = Array2::from_shape_vec((2, 2), vec![1.0, 0.5, -0.25, 2.0]).unwrap();
        let layer = GnnLayerWeights {
            connectivity: Array2::zeros((2, 2)),
            proximity: w.clone(),
            destination: Array2::zeros((2, 2)),
        };
        let out = hetgnn_layer(&snap, &snap.features.clone(), &layer, Aggregation::Sum, Activation::Relu)
            .unwrap();

        // Scalar-by-scalar oracle: build A_hat densely and triple-loop.
        let n = 4;
        let a = &snap.adj_proximity;
        let deg: Vec<f64> = (0..n).map(|i| a.row(i).sum() + 1.0).collect();
        let mut oracle = Array2::zeros((4, 2));
        for i in 0..n {
            for c in 0..2 {
                let mut acc = 0.0;
                for j in 0..n {
                    let w_ij = if i == j { 1.0 } else { a[[i, j]] };
                    if w_ij == 0.0 {
                        continue;
                    }
                    let coeff = w_ij / (deg[i] * deg[j]).sqrt();
                    let mut proj = 0.0;
                    for x in 0..2 {
                        proj += snap.features[[j, x]] * w[[x, c]];
                    }
                    acc += coeff * proj;
                }
                oracle[[i, c]] = acc.max(0.0);
            }
        }
        for i in 0..4 {
            for c in 0..2 {
                assert!(
                    (out[[i, c]] - oracle[[i, c]]).abs() < 1e-12,
                    "({i},{c}): {} vs {}",
                    out[[i, c]],
                    oracle[[i, c]]
                );
            }
        }
    }

    #[test]
    fn layer_is_permutation_equivariant_bitwise() {
        let snap = random_snapshot(7, 5, 9, 0);
        let config = small_config(5);
        let weights = init_weights(&config).unwrap();
        let out = hetgnn_layer(
            &snap,
            &snap.features.clone(),
            &weights.gnn[0],
            Aggregation::Sum,
            Activation::Relu,
        )
        .unwrap();

        let perm: Vec<usize> = vec![3, 0, 6, 2, 5, 1, 4];
        let permuted = snap.induced(&perm);
        let out_p = hetgnn_layer(
            &permuted,
            &permuted.features.clone(),
            &weights.gnn[0],
            Aggregation::Sum,
            Activation::Relu,
        )
        .unwrap();
        for (new_row, &old_row) in perm.iter().enumerate() {
            for c in 0..out.ncols() {
                assert_eq!(out[[old_row, c]], out_p[[new_row, c]], "row {old_row} ch {c}");
            }
        }
    }

    #[test]
    fn relation_fusion_is_linear_under_linear_activation() {
        let snap = random_snapshot(6, 4, 13, 0);
        let config = small_config(4);
        let weights = init_weights(&config).unwrap();
        let layer = &weights.gnn[0];
        let fused = hetgnn_layer(&snap, &snap.features.clone(), layer, Aggregation::Sum, Activation::Linear)
            .unwrap();
        let single = |conn: bool, prox: bool, dest: bool| {
            let z = Array2::zeros(layer.connectivity.dim());
            let l = GnnLayerWeights {
                connectivity: if conn { layer.connectivity.clone() } else { z.clone() },
                proximity: if prox { layer.proximity.clone() } else { z.clone() },
                destination: if dest { layer.destination.clone() } else { z },
            };
            hetgnn_layer(&snap, &snap.features.clone(), &l, Aggregation::Sum, Activation::Linear).unwrap()
        };
        let sum = &(&single(true, false, false) + &single(false, true, false)) + &single(false, false, true);
        for (a, b) in fused.iter().zip(sum.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_give_zero_predictions() {
        let config = ModelConfig {
            gnn_layers: 1,
            lstm_layers: 1,
            input_dim: 1,
            output_dim: 1,
            hidden_dim: 1,
            horizon: 1,
            aggregation: Aggregation::Sum,
            weight_seed: 0,
        };
        let mut weights = init_weights(&config).unwrap();
        for layer in &mut weights.gnn {
            layer.connectivity.fill(0.0);
            layer.proximity.fill(0.0);
            layer.destination.fill(0.0);
        }
        for layer in &mut weights.lstm {
            layer.w_ih.fill(0.0);
            layer.w_hh.fill(0.0);
        }
        weights.output.fill(0.0);
        let window = vec![random_snapshot(1, 1, 2, 0)];
        let out = forward(&window, &config, &weights).unwrap();
        assert_eq!(out.dim(), (1, 1, 1));
        assert_eq!(out[[0, 0, 0]], 0.0);
    }

    #[test]
    fn forward_shape_contract_and_window_checks() {
        let config = small_config(4);
        let weights = init_weights(&config).unwrap();
        let window: Vec<HINSnapshot> = (0..3).map(|t| random_snapshot(5, 4, 100 + t, t as i64)).collect();
        let out = forward(&window, &config, &weights).unwrap();
        assert_eq!(out.dim(), (2, 5, 4));

        let mut bad = window.clone();
        bad[1] = random_snapshot(6, 4, 7, 1);
        assert!(matches!(
            forward(&bad, &config, &weights),
            Err(Error::InconsistentWindow(_))
        ));
    }

    #[test]
    fn forward_depends_only_on_the_hop_ball() {
        // Zeroing features outside the L-hop ball of a node leaves that
        // node's forecast untouched, exactly.
        let config = small_config(4);
        let weights = init_weights(&config).unwrap();
        let window: Vec<HINSnapshot> = (0..2).map(|t| random_snapshot(20, 4, 300 + t, t as i64)).collect();
        let out = forward(&window, &config, &weights).unwrap();

        // The forecast couples slots through the LSTM, so the relevant ball
        // is the union over slots; zero features outside it.
        let target = 4usize;
        let mut inside = vec![false; 20];
        for snap in &window {
            let cg = crate::compgraph::extract(&snap.union_topology(), target, config.gnn_layers).unwrap();
            for i in cg.ball() {
                inside[i] = true;
            }
        }
        let mut masked: Vec<HINSnapshot> = window.clone();
        for snap in &mut masked {
            for i in 0..20 {
                if !inside[i] {
                    snap.features.row_mut(i).fill(0.0);
                }
            }
        }
        let out_masked = forward(&masked, &config, &weights).unwrap();
        for step in 0..2 {
            for d in 0..4 {
                assert_eq!(out[[step, target, d]], out_masked[[step, target, d]]);
            }
        }
    }

    #[test]
    fn metrics_hand_cases() {
        let m = metrics(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!((m.rmse, m.mae, m.mape), (0.0, 0.0, 0.0));

        let m = metrics(&[1.0, 1.0], &[0.0, 2.0]).unwrap();
        assert!((m.rmse - 1.0).abs() < 1e-15);
        assert!((m.mae - 1.0).abs() < 1e-15);
        assert!((m.mape - 100.0).abs() < 1e-15);
        assert_eq!(m.mape_excluded, 0);

        // Zero-truth terms drop out of MAPE with a count.
        let m = metrics(&[0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(m.mape_excluded, 1);
        assert!((m.mape - 50.0).abs() < 1e-12);
    }

    #[test]
    fn metrics_scale_as_expected() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x: Vec<f64> = (0..50).map(|_| rng.gen::<f64>() + 0.5).collect();
        let xh: Vec<f64> = (0..50).map(|_| rng.gen::<f64>() + 0.5).collect();
        let base = metrics(&x, &xh).unwrap();
        let c = 3.7;
        let xs: Vec<f64> = x.iter().map(|v| c * v).collect();
        let xhs: Vec<f64> = xh.iter().map(|v| c * v).collect();
        let scaled = metrics(&xs, &xhs).unwrap();
        assert!((scaled.rmse - c * base.rmse).abs() < 1e-9);
        assert!((scaled.mae - c * base.mae).abs() < 1e-9);
        assert!((scaled.mape - base.mape).abs() < 1e-9);
    }

    #[test]
    fn metrics_match_scalar_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let n = rng.gen_range(1..60);
            let x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let xh: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
            let m = metrics(&x, &xh).unwrap();

            // Independent scalar implementation.
            let mut sq = 0.0;
            let mut abs = 0.0;
            let mut pct = 0.0;
            let mut cnt = 0;
            for i in 0..n {
                sq += (x[i] - xh[i]) * (x[i] - xh[i]);
                abs += (x[i] - xh[i]).abs();
                if x[i] != 0.0 {
                    pct += ((x[i] - xh[i]) / x[i]).abs();
                    cnt += 1;
                }
            }
            assert!((m.rmse - (sq / n as f64).sqrt()).abs() < 1e-12);
            assert!((m.mae - abs / n as f64).abs() < 1e-12);
            if cnt > 0 {
                assert!((m.mape - 100.0 * pct / cnt as f64).abs() < 1e-12);
            }
        }
    }
}
