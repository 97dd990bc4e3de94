//! Inference-delay modeling for the three execution regimes.
//!
//! Peer-to-peer (per-taxi) inference is priced two ways that must agree:
//! closed-form lower/upper bounds driven by per-hop degree statistics, and a
//! feasible half-duplex communication schedule whose makespan always lands
//! inside those bounds. Server and cloudlet execution use phase accounting
//! (uplink, per-layer compute and exchange, downlink) built from the same
//! constants.

use serde::{Deserialize, Serialize};

use crate::compgraph::ComputationalGraph;
use crate::hin::HINSnapshot;
use crate::partition::Assignment;
use crate::{Error, Result};

/// Every latency constant the delay models use, in milliseconds.
///
/// Ad-hoc links charge `t_s + t_r` per exchange with a neighbor (one message
/// in, one result back). `t_r` defaults to the relay-node figure
/// `adhoc_relay_processing + adhoc_link_transmission`; the dearer source
/// figure is kept for reporting. `t_p` is the per-layer processing delay of
/// an on-taxi device, coherent with `tau * device_slowdown`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DelayModel {
    /// Per-exchange receive delay on ad-hoc links.
    pub t_r: f64,
    /// Per-exchange send delay on ad-hoc links; conventionally equal to `t_r`.
    pub t_s: f64,
    /// GNN-layer processing delay per node-message on a taxi device.
    pub t_p: f64,
    pub adhoc_source_processing: f64,
    pub adhoc_relay_processing: f64,
    pub adhoc_link_transmission: f64,
    /// Packet delay on the taxi-to-base-station channel.
    pub its_g5_packet_delay: f64,
    /// Cloudlet compute time as a multiple of the reference server's.
    pub cloudlet_slowdown: f64,
    /// Taxi-device compute time as a multiple of the reference server's.
    pub device_slowdown: f64,
    /// Inter-cloudlet packet delay.
    pub t_cln: f64,
    /// In-memory message passing cost per message (server or cloudlet).
    pub t_c: f64,
    /// Per node-message layer processing delay on the reference server.
    pub tau: f64,
}

impl Default for DelayModel {
    fn default() -> Self {
        Self {
            t_r: 18.65,
            t_s: 18.65,
            t_p: 10.0,
            adhoc_source_processing: 16.55,
            adhoc_relay_processing: 11.65,
            adhoc_link_transmission: 7.0,
            its_g5_packet_delay: 3.3,
            cloudlet_slowdown: 10.0,
            device_slowdown: 100.0,
            t_cln: 3.3,
            t_c: 0.001,
            tau: 0.1,
        }
    }
}

impl DelayModel {
    pub fn validate(&self) -> Result<()> {
        let delays = [
            self.t_r,
            self.t_s,
            self.t_p,
            self.adhoc_source_processing,
            self.adhoc_relay_processing,
            self.adhoc_link_transmission,
            self.its_g5_packet_delay,
            self.t_cln,
            self.t_c,
            self.tau,
        ];
        if delays.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidConfig("delays must be finite and >= 0".into()));
        }
        if self.cloudlet_slowdown < 1.0 || self.device_slowdown < 1.0 {
            return Err(Error::InvalidConfig("slowdown multipliers must be >= 1".into()));
        }
        Ok(())
    }

    /// Wall time one neighbor exchange occupies both endpoints.
    pub fn exchange_delay(&self) -> f64 {
        self.t_s + self.t_r
    }
}

/// Where the per-level processing term sits in the closed-form bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    /// Processing added once per level, outside the link-delay factor.
    /// Dimensionally consistent with the schedule the simulator runs.
    #[default]
    Standard,
    /// Processing kept inside the link-delay bracket (so multiplied by the
    /// exchange delay). Kept for comparison against the other convention.
    BracketedProcessing,
}

/// Per-hop contribution to the delay bounds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HopTerm {
    pub hop: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Closed-form bounds on the peer-to-peer inference delay of one root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DelayBounds {
    pub lower: f64,
    pub upper: f64,
    pub per_hop_terms: Vec<HopTerm>,
}

/// Bound the multi-hop message-passing delay of `cg`'s root.
///
/// Hop-`l` traffic is exchanged `L - l + 1` times. One exchange costs
/// `(t_s + t_r) * (l * d_root + B_l) + (l + 1) * t_p`, where `B_l` ranges
/// from the maximum shell degree (fully concurrent gathers) to the shell
/// degree sum (fully serialized gathers). A hop with no shell nodes has no
/// traffic, so its rounds keep only the layer-processing floor
/// `(l + 1) * t_p`; an isolated root therefore costs exactly the pure
/// processing floor.
pub fn inference_delay_bounds(cg: &ComputationalGraph, model: &DelayModel) -> DelayBounds {
    inference_delay_bounds_with_form(cg, model, BoundForm::Standard)
}

pub fn inference_delay_bounds_with_form(
    cg: &ComputationalGraph,
    model: &DelayModel,
    form: BoundForm,
) -> DelayBounds {
    let link = model.exchange_delay();
    let d_i = cg.root_degree as f64;
    let mut per_hop_terms = Vec::with_capacity(cg.hops);
    let mut lower = 0.0;
    let mut upper = 0.0;
    for l in 1..=cg.hops {
        let reps = (cg.hops - l + 1) as f64;
        let degrees = &cg.hop_degrees[l - 1];
        let processing = (l as f64 + 1.0) * model.t_p;
        let (lo, hi) = if degrees.is_empty() {
            let floor = reps * processing;
            (floor, floor)
        } else {
            let max_d = degrees.iter().copied().max().unwrap_or(0) as f64;
            let sum_d: usize = degrees.iter().sum();
            let sum_d = sum_d as f64;
            match form {
                BoundForm::Standard => (
                    reps * (link * (l as f64 * d_i + max_d) + processing),
                    reps * (link * (l as f64 * d_i + sum_d) + processing),
                ),
                BoundForm::BracketedProcessing => (
                    reps * link * (l as f64 * d_i + max_d + processing),
                    reps * link * (l as f64 * d_i + sum_d + processing),
                ),
            }
        };
        per_hop_terms.push(HopTerm { hop: l, lower: lo, upper: hi });
        lower += lo;
        upper += hi;
    }
    DelayBounds { lower, upper, per_hop_terms }
}

/// One point-to-point transfer in a communication schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinkEvent {
    /// Start time in ms. The event occupies both endpoints for the exchange
    /// delay.
    pub time: f64,
    pub src: usize,
    pub dst: usize,
    /// Which hop shell's traffic this transfer carries.
    pub hop: usize,
    pub payload: u64,
}

/// Feasible half-duplex schedule: no node is in two transfers at once.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleTrace {
    pub events: Vec<LinkEvent>,
    pub makespan: f64,
}

struct RoundOutcome {
    duration: f64,
    events: Vec<LinkEvent>,
}

/// One exchange round for hop-`l` traffic. Shell nodes first gather from
/// every neighbor (greedy list scheduling in (owner, partner) order, each
/// exchange occupying both endpoints), process once, then the root runs `l`
/// relay steps of `d_root` exchanges plus a layer application each. An
/// empty shell has nothing to exchange or relay, so its round is just the
/// layer-processing floor.
fn simulate_round(
    cg: &ComputationalGraph,
    l: usize,
    model: &DelayModel,
    collect_events: bool,
    payload: &mut u64,
) -> RoundOutcome {
    let link = model.exchange_delay();
    let shell = &cg.hop_sets[l - 1];
    let neighbors = &cg.shell_neighbors[l - 1];
    if shell.is_empty() {
        return RoundOutcome {
            duration: (l as f64 + 1.0) * model.t_p,
            events: Vec::new(),
        };
    }
    let mut events = Vec::new();
    let mut busy: std::collections::HashMap<usize, f64> = std::collections::HashMap::new();
    let mut stage_max = 0.0f64;

    for (x_pos, &x) in shell.iter().enumerate() {
        for &nbr in &neighbors[x_pos] {
            let start = busy.get(&x).copied().unwrap_or(0.0).max(busy.get(&nbr).copied().unwrap_or(0.0));
            let end = start + link;
            busy.insert(x, end);
            busy.insert(nbr, end);
            stage_max = stage_max.max(end);
            if collect_events {
                events.push(LinkEvent { time: start, src: nbr, dst: x, hop: l, payload: *payload });
            }
            *payload += 1;
        }
    }

    // One layer application per level: shell nodes process after gathering
    // (concurrently), then each relay step toward the root processes once.
    let mut t = stage_max + model.t_p;
    for _step in 0..l {
        for &nbr in &cg.root_neighbors {
            if collect_events {
                events.push(LinkEvent { time: t, src: nbr, dst: cg.root, hop: l, payload: *payload });
            }
            *payload += 1;
            t += link;
        }
        t += model.t_p;
    }
    RoundOutcome { duration: t, events }
}

fn simulate(cg: &ComputationalGraph, model: &DelayModel, collect_events: bool) -> (f64, Vec<LinkEvent>) {
    let mut payload = 0u64;
    let mut offset = 0.0;
    let mut all_events = Vec::new();
    for l in 1..=cg.hops {
        let round = simulate_round(cg, l, model, collect_events, &mut payload);
        let reps = cg.hops - l + 1;
        for rep in 0..reps {
            if collect_events {
                let base = offset + rep as f64 * round.duration;
                all_events.extend(round.events.iter().map(|e| LinkEvent {
                    time: base + e.time,
                    ..*e
                }));
            }
        }
        offset += reps as f64 * round.duration;
    }
    if collect_events {
        all_events.sort_by(|a, b| {
            a.time
                .total_cmp(&b.time)
                .then(a.src.cmp(&b.src))
                .then(a.dst.cmp(&b.dst))
        });
        let mut payload = 0u64;
        for e in &mut all_events {
            e.payload = payload;
            payload += 1;
        }
    }
    (offset, all_events)
}

/// Run the peer-to-peer message-passing schedule for one root and return its
/// makespan with the full event trace.
pub fn simulate_decentralized(cg: &ComputationalGraph, model: &DelayModel) -> (f64, ScheduleTrace) {
    let (makespan, events) = simulate(cg, model, true);
    (makespan, ScheduleTrace { events, makespan })
}

/// Makespan-only fast path of [`simulate_decentralized`]; identical
/// arithmetic, no event materialization.
pub fn decentralized_delay(cg: &ComputationalGraph, model: &DelayModel) -> f64 {
    simulate(cg, model, false).0
}

/// Phase breakdown of server-based inference.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CentralizedBreakdown {
    pub uplink: f64,
    pub compute: f64,
    pub downlink: f64,
}

/// Compute site accounting shared by the server and cloudlet models: serial
/// uplink on the site's channel, per layer in-memory message passing plus
/// inter-site exchange plus processing, serial downlink.
fn site_phases(
    node_count: usize,
    intra_messages: usize,
    inter_messages_per_layer: usize,
    layers: usize,
    speed_multiplier: f64,
    model: &DelayModel,
) -> (f64, f64, f64) {
    let n = node_count as f64;
    let uplink = n * model.its_g5_packet_delay;
    let per_layer = intra_messages as f64 * model.t_c
        + inter_messages_per_layer as f64 * model.t_cln
        + n * model.tau * speed_multiplier;
    let downlink = n * model.its_g5_packet_delay;
    (uplink, layers as f64 * per_layer, downlink)
}

/// Delay of one inference round on a central server: every taxi uploads over
/// one shared base-station channel, the server runs `layers` of in-memory
/// message passing and processing, then results go back down.
pub fn centralized_delay(
    snapshot: &HINSnapshot,
    layers: usize,
    model: &DelayModel,
) -> (f64, CentralizedBreakdown) {
    let messages = 2 * snapshot.union_edge_count();
    let (uplink, compute, downlink) =
        site_phases(snapshot.node_count(), messages, 0, layers, 1.0, model);
    (
        uplink + compute + downlink,
        CentralizedBreakdown { uplink, compute, downlink },
    )
}

/// Per-cloudlet delay decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClnDelay {
    pub cln: u32,
    pub nodes: usize,
    pub uplink: f64,
    pub compute: f64,
    /// Portion of `compute` spent on inter-cloudlet exchange.
    pub inter_cln_exchange: f64,
    pub downlink: f64,
    pub total: f64,
}

/// Delay of one inference round under cloudlet execution: cells work in
/// parallel, each serializing its own uplink/downlink and exchanging
/// boundary messages with neighbors every layer; the slowest cell decides.
/// `assignment_cost` (the repartition protocol's latency) is added to the
/// overall figure when present.
pub fn semidecentralized_delay(
    assignment: &Assignment,
    snapshot: &HINSnapshot,
    layers: usize,
    model: &DelayModel,
    assignment_cost: Option<f64>,
) -> Result<(f64, Vec<ClnDelay>)> {
    let n = snapshot.node_count();
    if assignment.node_to_cln.len() != n {
        return Err(Error::AssignmentMismatch(format!(
            "assignment covers {} nodes, snapshot has {}",
            assignment.node_to_cln.len(),
            n
        )));
    }
    let mut owner = vec![u32::MAX; n];
    for (i, node) in snapshot.nodes.iter().enumerate() {
        match assignment.node_to_cln.get(&node.id) {
            Some(&cln) => owner[i] = cln,
            None => {
                return Err(Error::AssignmentMismatch(format!(
                    "node {} missing from assignment",
                    node.id
                )))
            }
        }
    }

    let union = snapshot.union_topology();
    let mut cln_ids: Vec<u32> = assignment.node_to_cln.values().copied().collect();
    cln_ids.sort_unstable();
    cln_ids.dedup();

    let mut breakdown = Vec::with_capacity(cln_ids.len());
    let mut overall = 0.0f64;
    for &cln in &cln_ids {
        let members: Vec<usize> = (0..n).filter(|&i| owner[i] == cln).collect();
        let mut intra = 0usize;
        for &i in &members {
            for j in 0..n {
                if union[[i, j]] != 0 && owner[j] == cln {
                    intra += 1;
                }
            }
        }
        let incident = assignment
            .inter_cln_edges
            .iter()
            .filter(|e| e.cln_a == cln || e.cln_b == cln)
            .count();
        // Each incident cut edge costs one send and one receive per layer.
        let (uplink, compute, downlink) = site_phases(
            members.len(),
            intra,
            2 * incident,
            layers,
            model.cloudlet_slowdown,
            model,
        );
        let exchange = layers as f64 * (2 * incident) as f64 * model.t_cln;
        let total = uplink + compute + downlink;
        overall = overall.max(total);
        breakdown.push(ClnDelay {
            cln,
            nodes: members.len(),
            uplink,
            compute,
            inter_cln_exchange: exchange,
            downlink,
            total,
        });
    }
    Ok((overall + assignment_cost.unwrap_or(0.0), breakdown))
}

/// Inputs to the closed-form scaling models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostModelInputs {
    pub taxis: usize,
    pub regions: usize,
    pub history_p: usize,
    pub horizon_q: usize,
    pub grid_m: usize,
    pub grid_n: usize,
    pub layers: usize,
    /// Fraction of a cell's nodes that are boundary nodes.
    pub boundary_fraction: f64,
    pub model: DelayModel,
}

impl CostModelInputs {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.boundary_fraction) {
            return Err(Error::InvalidConfig("boundary fraction must be in [0, 1]".into()));
        }
        if self.regions == 0 || self.taxis < self.regions {
            return Err(Error::InvalidConfig(
                "need at least one region and taxis >= regions".into(),
            ));
        }
        Ok(())
    }
}

/// Closed-form inference-time scaling, with unit leading constants.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AnalyticCosts {
    /// Region-as-node approaches: K * P * Q * (L^2 * t_r + L * tau).
    pub region_level: f64,
    /// Per-cloudlet cost of taxi-level inference:
    /// mnPQ * t_c * N/K + mnPQ * (N/K) * L * tau + gamma * (N/K) * L^2 * t_cln.
    pub per_cloudlet: f64,
}

pub fn analytic_costs(inputs: &CostModelInputs) -> Result<AnalyticCosts> {
    inputs.validate()?;
    let m = &inputs.model;
    let k = inputs.regions as f64;
    let n_per_k = inputs.taxis as f64 / k;
    let pq = (inputs.history_p * inputs.horizon_q) as f64;
    let mn = (inputs.grid_m * inputs.grid_n) as f64;
    let l = inputs.layers as f64;
    let region_level = k * pq * (l * l * m.t_r + l * m.tau);
    let per_cloudlet = mn * pq * m.t_c * n_per_k
        + mn * pq * n_per_k * l * m.tau
        + inputs.boundary_fraction * n_per_k * l * l * m.t_cln;
    Ok(AnalyticCosts { region_level, per_cloudlet })
}

/// Least-squares fit of `y = a + b*x + c*x^2`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r_squared: f64,
}

pub fn quadratic_fit(xs: &[f64], ys: &[f64]) -> Result<QuadraticFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InvalidConfig(
            "quadratic fit needs at least three (x, y) pairs".into(),
        ));
    }
    // Normal equations for the Vandermonde system.
    let n = xs.len() as f64;
    let s: Vec<f64> = (0..5)
        .map(|p: i32| xs.iter().map(|x| x.powi(p)).sum())
        .collect();
    let t: Vec<f64> = (0..3)
        .map(|p: i32| xs.iter().zip(ys).map(|(x, y)| x.powi(p) * y).sum())
        .collect();
    let mut m = [
        [n, s[1], s[2], t[0]],
        [s[1], s[2], s[3], t[1]],
        [s[2], s[3], s[4], t[2]],
    ];
    // Gaussian elimination with partial pivoting.
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        if m[col][col].abs() < 1e-12 {
            return Err(Error::InvalidConfig("singular quadratic fit system".into()));
        }
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut coef = [0.0; 3];
    for row in (0..3).rev() {
        let mut v = m[row][3];
        for k in (row + 1)..3 {
            v -= m[row][k] * coef[k];
        }
        coef[row] = v / m[row][row];
    }
    let mean = ys.iter().sum::<f64>() / n;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let fit = coef[0] + coef[1] * x + coef[2] * x * x;
            (y - fit).powi(2)
        })
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(QuadraticFit { a: coef[0], b: coef[1], c: coef[2], r_squared })
}
