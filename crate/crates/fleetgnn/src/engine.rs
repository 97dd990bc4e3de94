//! End-to-end inference in the three execution regimes.
//!
//! The centralized run is the reference: one forward pass over the full
//! window. The decentralized run gives every taxi only its multi-hop radio
//! neighborhood; the cloudlet run gives every cell its own sub-graph plus
//! boundary-state exchange with neighboring cells each layer. Where a
//! regime's information set covers a node's dependency ball, its forecast
//! must agree with the reference bit for bit.

use std::collections::BTreeSet;

use ndarray::{Array2, Array3};
use rayon::prelude::*;
use serde::Serialize;

use crate::compgraph;
use crate::datagen::{generate, FleetGenConfig};
use crate::hin::{GraphConfig, HINSnapshot, NodeId};
use crate::model::{self, ModelConfig, WeightSet};
use crate::netdelay::{
    centralized_delay, decentralized_delay, inference_delay_bounds, semidecentralized_delay,
    ClnDelay, DelayModel,
};
use crate::partition::{
    adaptive_assign, grid_regions, regions_adjacent, uniform_assign, AdaptiveConfig, Assignment,
    CLNRegion, ClnId, Rect,
};
use crate::{Error, Result};

/// Execution regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Centralized,
    Decentralized,
    SemiDecentralized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentPolicy {
    #[default]
    Uniform,
    Adaptive,
}

/// Which cloudlet pairs exchange boundary state every layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExchangeScope {
    /// Geometrically adjacent cells only; farther dependencies are dropped.
    #[default]
    Adjacent,
    /// Every cell pair; no dependency is ever dropped.
    AllPairs,
}

/// Everything one engine run needs.
pub struct EngineInputs<'a> {
    pub window: &'a [HINSnapshot],
    pub model_config: &'a ModelConfig,
    pub weights: &'a WeightSet,
    pub delay: &'a DelayModel,
}

/// Outcome of one inference round in one regime.
#[derive(Debug, Clone)]
pub struct InferenceReport {
    pub setting: Setting,
    /// horizon x N x output_dim, node order matching the window.
    pub predictions: Array3<f64>,
    pub latency_total: f64,
    /// Named latency components; they sum to `latency_total`.
    pub latency_components: Vec<(String, f64)>,
    /// Per-node schedule makespans (decentralized only).
    pub per_node_delay: Option<Vec<f64>>,
    /// Per-cloudlet phase breakdowns (cloudlet run only).
    pub per_cln: Option<Vec<ClnDelay>>,
    /// Realized fraction of nodes that are boundary nodes.
    pub boundary_fraction: Option<f64>,
    /// Cloudlet-to-cloudlet messages sent per GNN layer.
    pub inter_cln_messages_per_layer: Option<usize>,
    pub assignment: Option<Assignment>,
    /// Nodes whose forecast differs from the centralized reference beyond
    /// 1e-9 relative (information truncation).
    pub truncated_nodes: Vec<NodeId>,
    /// Nodes that lost at least one neighbor contribution to an
    /// out-of-scope cell.
    pub dropped_dependency_nodes: usize,
    /// Latency of the repartition protocol itself, when one ran.
    pub protocol_cost: Option<f64>,
}

fn components_total(components: &[(String, f64)]) -> f64 {
    components.iter().map(|(_, v)| v).sum()
}

/// Reference regime: full-graph forward on the server.
pub fn run_centralized(inputs: &EngineInputs) -> Result<InferenceReport> {
    let predictions = model::forward(inputs.window, inputs.model_config, inputs.weights)?;
    let last = inputs.window.last().ok_or_else(|| Error::EmptyInput("empty window".into()))?;
    let (total, parts) = centralized_delay(last, inputs.model_config.gnn_layers, inputs.delay);
    let latency_components = vec![
        ("uplink".to_string(), parts.uplink),
        ("compute".to_string(), parts.compute),
        ("downlink".to_string(), parts.downlink),
    ];
    debug_assert!((components_total(&latency_components) - total).abs() < 1e-9);
    Ok(InferenceReport {
        setting: Setting::Centralized,
        predictions,
        latency_total: total,
        latency_components,
        per_node_delay: None,
        per_cln: None,
        boundary_fraction: None,
        inter_cln_messages_per_layer: None,
        assignment: None,
        truncated_nodes: Vec::new(),
        dropped_dependency_nodes: 0,
        protocol_cost: None,
    })
}

/// Radio-constrained topology: an edge wherever two taxis sit within
/// `comm_range` of each other on the given snapshot.
pub fn radio_topology(snapshot: &HINSnapshot, comm_range: f64) -> Array2<u8> {
    let n = snapshot.node_count();
    let mut t = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            if snapshot.nodes[i].position.dist(&snapshot.nodes[j].position) <= comm_range {
                t[[i, j]] = 1;
                t[[j, i]] = 1;
            }
        }
    }
    t
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() / scale
}

/// Peer-to-peer regime: every taxi computes on the sub-graph its radio can
/// reach within `L` hops. Taxis outside a node's reach simply do not exist
/// for it, so forecasts can deviate from the reference; deviating nodes are
/// flagged.
pub fn run_decentralized(inputs: &EngineInputs, comm_range: f64) -> Result<InferenceReport> {
    if !(comm_range > 0.0) {
        return Err(Error::InvalidConfig("communication range must be positive".into()));
    }
    let last = inputs.window.last().ok_or_else(|| Error::EmptyInput("empty window".into()))?;
    let n = last.node_count();
    let layers = inputs.model_config.gnn_layers;
    let q = inputs.model_config.horizon;
    let out_dim = inputs.model_config.output_dim;

    let reference = model::forward(inputs.window, inputs.model_config, inputs.weights)?;
    let radio = radio_topology(last, comm_range);
    let adj = compgraph::adjacency_lists(&radio);

    let per_node: Vec<(Vec<f64>, f64, bool)> = (0..n)
        .into_par_iter()
        .map(|root| {
            let cg = compgraph::extract_with_adjacency(&adj, root, layers)
                .expect("root in range by construction");
            let mut ball = cg.ball();
            ball.sort_unstable();
            let local_root = ball.iter().position(|&i| i == root).unwrap();
            let sub_window: Vec<HINSnapshot> =
                inputs.window.iter().map(|s| s.induced(&ball)).collect();
            let pred = model::forward(&sub_window, inputs.model_config, inputs.weights)
                .expect("subgraph forward");
            let mut row = Vec::with_capacity(q * out_dim);
            let mut truncated = false;
            for step in 0..q {
                for d in 0..out_dim {
                    let v = pred[[step, local_root, d]];
                    row.push(v);
                    if relative_gap(v, reference[[step, root, d]]) > 1e-9 {
                        truncated = true;
                    }
                }
            }
            let delay = decentralized_delay(&cg, inputs.delay);
            (row, delay, truncated)
        })
        .collect();

    let mut predictions = Array3::zeros((q, n, out_dim));
    let mut delays = Vec::with_capacity(n);
    let mut truncated_nodes = Vec::new();
    for (root, (row, delay, truncated)) in per_node.iter().enumerate() {
        for step in 0..q {
            for d in 0..out_dim {
                predictions[[step, root, d]] = row[step * out_dim + d];
            }
        }
        delays.push(*delay);
        if *truncated {
            truncated_nodes.push(last.nodes[root].id);
        }
    }
    let total = delays.iter().copied().fold(0.0, f64::max);
    Ok(InferenceReport {
        setting: Setting::Decentralized,
        predictions,
        latency_total: total,
        latency_components: vec![("slowest_node_makespan".to_string(), total)],
        per_node_delay: Some(delays),
        per_cln: None,
        boundary_fraction: None,
        inter_cln_messages_per_layer: None,
        assignment: None,
        truncated_nodes,
        dropped_dependency_nodes: 0,
        protocol_cost: None,
    })
}

/// Cloudlet regime: coverage or repartitioned assignment, per-cell forward
/// with per-layer boundary exchange, LSTM on each cell's own rows.
#[allow(clippy::too_many_arguments)]
pub fn run_semidecentralized(
    inputs: &EngineInputs,
    regions: &[CLNRegion],
    policy: AssignmentPolicy,
    scope: ExchangeScope,
    seed: u64,
    include_assignment_cost: bool,
) -> Result<InferenceReport> {
    let last = inputs.window.last().ok_or_else(|| Error::EmptyInput("empty window".into()))?;
    let layers = inputs.model_config.gnn_layers;

    let uniform = uniform_assign(last, regions)?;
    let (assignment, protocol_cost) = match policy {
        AssignmentPolicy::Uniform => (uniform, None),
        AssignmentPolicy::Adaptive => {
            let cfg = AdaptiveConfig { band_hops: 2 * layers, passes: 1 };
            let (a, cost) = adaptive_assign(&uniform, last, regions, inputs.delay, &cfg, seed)?;
            (a, Some(cost))
        }
    };

    // Ownership by node index, plus the exchange reach between cells.
    let owner: Vec<ClnId> = last
        .nodes
        .iter()
        .map(|node| assignment.node_to_cln[&node.id])
        .collect();
    let mut reachable: BTreeSet<(ClnId, ClnId)> = BTreeSet::new();
    for (i, a) in regions.iter().enumerate() {
        for b in regions.iter().skip(i + 1) {
            if regions_adjacent(a, b) {
                let p = if a.id < b.id { (a.id, b.id) } else { (b.id, a.id) };
                reachable.insert(p);
            }
        }
    }
    let visible = |i: usize, j: usize| -> bool {
        let (u, v) = (owner[i], owner[j]);
        u == v
            || scope == ExchangeScope::AllPairs
            || reachable.contains(&(u.min(v), u.max(v)))
    };

    let mut dropped = vec![false; last.node_count()];
    let embeddings: Vec<Array2<f64>> = inputs
        .window
        .iter()
        .map(|snap| {
            let rel = model::normalize_snapshot(snap);
            model::gnn_stack_visible(
                &rel,
                &snap.features,
                inputs.model_config,
                inputs.weights,
                &visible,
                &mut dropped,
            )
        })
        .collect();
    let predictions = model::lstm_head(&embeddings, inputs.model_config, inputs.weights);

    let assignment_cost = if include_assignment_cost { protocol_cost } else { None };
    let (total, per_cln) =
        semidecentralized_delay(&assignment, last, layers, inputs.delay, assignment_cost)?;
    let slowest = per_cln.iter().map(|c| c.total).fold(0.0, f64::max);
    let mut latency_components = vec![("slowest_cloudlet".to_string(), slowest)];
    if let Some(cost) = assignment_cost {
        latency_components.push(("assignment_protocol".to_string(), cost));
    }
    debug_assert!((components_total(&latency_components) - total).abs() < 1e-9);

    Ok(InferenceReport {
        setting: Setting::SemiDecentralized,
        predictions,
        latency_total: total,
        latency_components,
        boundary_fraction: Some(assignment.boundary_fraction()),
        inter_cln_messages_per_layer: Some(2 * assignment.inter_cln_edges.len()),
        per_node_delay: None,
        per_cln: Some(per_cln),
        assignment: Some(assignment),
        truncated_nodes: Vec::new(),
        dropped_dependency_nodes: dropped.iter().filter(|&&d| d).count(),
        protocol_cost,
    })
}

/// One row of the settings-comparison table.
#[derive(Debug, Clone, Serialize)]
pub struct DelayRow {
    pub setting: String,
    pub l: usize,
    pub trial: usize,
    pub total_ms: f64,
    pub uplink_ms: f64,
    pub compute_ms: f64,
    pub exchange_ms: f64,
    pub downlink_ms: f64,
    pub protocol_ms: f64,
    pub inter_cln_edges: usize,
    pub boundary_fraction: f64,
}

/// One row of the bounds-containment table (per-trial means over roots).
#[derive(Debug, Clone, Serialize)]
pub struct BoundsRow {
    pub l: usize,
    pub trial: usize,
    pub lower_ms: f64,
    pub actual_ms: f64,
    pub upper_ms: f64,
}

/// Declarative sweep over settings, layer counts, and trials.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub fleet: FleetGenConfig,
    pub graph: GraphConfig,
    pub delay: DelayModel,
    pub comm_range: f64,
    pub l_values: Vec<usize>,
    pub trials: usize,
    /// Cloudlet grids to compare, e.g. [(5, 2), (5, 4)].
    pub cln_grids: Vec<(usize, usize)>,
    pub include_assignment_cost: bool,
    /// Run the peer-to-peer simulator on at most this many roots per trial
    /// (all roots when absent). Sampling is deterministic: lowest indices.
    pub root_sample: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub delays: Vec<DelayRow>,
    pub bounds: Vec<BoundsRow>,
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Delay-focused comparison of all settings over `l_values` x `trials`.
/// Forecasts are not computed here; only the latency models run, which keeps
/// full sweeps fast.
pub fn compare_settings(spec: &SweepSpec) -> Result<SweepReport> {
    spec.delay.validate()?;
    if spec.l_values.is_empty() {
        return Err(Error::InvalidConfig("layer sweep must be nonempty".into()));
    }
    let area = Rect::new(
        crate::hin::Point2::new(0.0, 0.0),
        crate::hin::Point2::new(spec.fleet.area_width, spec.fleet.area_height),
    );

    let trials: Vec<Result<(Vec<DelayRow>, Vec<BoundsRow>)>> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let mut fleet = spec.fleet.clone();
            fleet.seed = spec.fleet.seed.wrapping_add(trial as u64);
            let data = generate(&fleet, &spec.graph, 1)?;
            let snapshot = &data.slots[0];
            let radio = radio_topology(snapshot, spec.comm_range);
            let adj = compgraph::adjacency_lists(&radio);
            let n = snapshot.node_count();
            let roots: Vec<usize> = match spec.root_sample {
                Some(k) => (0..n.min(k)).collect(),
                None => (0..n).collect(),
            };

            let mut delay_rows = Vec::new();
            let mut bounds_rows = Vec::new();
            for &l in &spec.l_values {
                // Server.
                let (cent, parts) = centralized_delay(snapshot, l, &spec.delay);
                delay_rows.push(DelayRow {
                    setting: "centralized".into(),
                    l,
                    trial,
                    total_ms: cent,
                    uplink_ms: parts.uplink,
                    compute_ms: parts.compute,
                    exchange_ms: 0.0,
                    downlink_ms: parts.downlink,
                    protocol_ms: 0.0,
                    inter_cln_edges: 0,
                    boundary_fraction: 0.0,
                });

                // Peer-to-peer: mean over roots, with matching bounds.
                let mut lowers = Vec::new();
                let mut actuals = Vec::new();
                let mut uppers = Vec::new();
                for &root in &roots {
                    let cg = compgraph::extract_with_adjacency(&adj, root, l)?;
                    let b = inference_delay_bounds(&cg, &spec.delay);
                    lowers.push(b.lower);
                    uppers.push(b.upper);
                    actuals.push(decentralized_delay(&cg, &spec.delay));
                }
                let actual_mean = mean(&actuals);
                bounds_rows.push(BoundsRow {
                    l,
                    trial,
                    lower_ms: mean(&lowers),
                    actual_ms: actual_mean,
                    upper_ms: mean(&uppers),
                });
                delay_rows.push(DelayRow {
                    setting: "decentralized".into(),
                    l,
                    trial,
                    total_ms: actual_mean,
                    uplink_ms: 0.0,
                    compute_ms: actual_mean,
                    exchange_ms: 0.0,
                    downlink_ms: 0.0,
                    protocol_ms: 0.0,
                    inter_cln_edges: 0,
                    boundary_fraction: 0.0,
                });

                // Cloudlets, uniform and repartitioned, per grid.
                for &(cols, rows) in &spec.cln_grids {
                    let regions = grid_regions(area, cols, rows);
                    let k = cols * rows;
                    let uniform = uniform_assign(snapshot, &regions)?;
                    let (unif_total, unif_cln) =
                        semidecentralized_delay(&uniform, snapshot, l, &spec.delay, None)?;
                    delay_rows.push(semi_row(
                        format!("semi_uniform_{k}"),
                        l,
                        trial,
                        unif_total,
                        &unif_cln,
                        0.0,
                        &uniform,
                    ));

                    let cfg = AdaptiveConfig { band_hops: 2 * l, passes: 1 };
                    let (adapted, cost) = adaptive_assign(
                        &uniform,
                        snapshot,
                        &regions,
                        &spec.delay,
                        &cfg,
                        fleet.seed,
                    )?;
                    let cost_opt = spec.include_assignment_cost.then_some(cost);
                    let (adapt_total, adapt_cln) =
                        semidecentralized_delay(&adapted, snapshot, l, &spec.delay, cost_opt)?;
                    delay_rows.push(semi_row(
                        format!("semi_adaptive_{k}"),
                        l,
                        trial,
                        adapt_total,
                        &adapt_cln,
                        cost_opt.unwrap_or(0.0),
                        &adapted,
                    ));
                }
            }
            Ok((delay_rows, bounds_rows))
        })
        .collect();

    let mut report = SweepReport::default();
    for outcome in trials {
        let (delays, bounds) = outcome?;
        report.delays.extend(delays);
        report.bounds.extend(bounds);
    }
    Ok(report)
}

fn semi_row(
    setting: String,
    l: usize,
    trial: usize,
    total: f64,
    per_cln: &[ClnDelay],
    protocol: f64,
    assignment: &Assignment,
) -> DelayRow {
    let slowest = per_cln
        .iter()
        .max_by(|a, b| a.total.total_cmp(&b.total))
        .expect("at least one cloudlet");
    DelayRow {
        setting,
        l,
        trial,
        total_ms: total,
        uplink_ms: slowest.uplink,
        compute_ms: slowest.compute - slowest.inter_cln_exchange,
        exchange_ms: slowest.inter_cln_exchange,
        downlink_ms: slowest.downlink,
        protocol_ms: protocol,
        inter_cln_edges: assignment.inter_cln_edges.len(),
        boundary_fraction: assignment.boundary_fraction(),
    }
}
