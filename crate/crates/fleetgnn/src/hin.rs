//! Heterogeneous taxi graph construction and per-slot evolution.
//!
//! Taxis are nodes. Three relations link them: road connectivity (binary),
//! spatial proximity (weighted, thresholded), and destination similarity
//! (weighted, thresholded). A snapshot freezes the graph for one time slot;
//! the graph is rebuilt from the updated node set when taxis arrive, depart,
//! or move.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type NodeId = u64;

/// Planar coordinate in meters (a local city frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// One taxi: current position, trip destination, and the per-slot feature
/// vector (demand/supply history of its vicinity grid).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaxiNode {
    pub id: NodeId,
    pub position: Point2,
    pub destination: Point2,
    #[serde(default)]
    pub features: Vec<f64>,
}

impl TaxiNode {
    pub fn new(id: NodeId, position: Point2, destination: Point2) -> Self {
        Self {
            id,
            position,
            destination,
            features: Vec::new(),
        }
    }
}

/// How a thresholded relation weights its edges. The sparsity pattern is
/// always `dist < threshold`; only the stored value differs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeWeight {
    /// `exp(-dist^2 / threshold^2)`: nearer pairs get larger weights.
    #[default]
    Gaussian,
    /// The raw distance value itself.
    RawDistance,
    /// 1.0 for every edge inside the threshold.
    Binary,
}

impl EdgeWeight {
    fn weight(&self, dist: f64, threshold: f64) -> f64 {
        match self {
            EdgeWeight::Gaussian => (-(dist * dist) / (threshold * threshold)).exp(),
            EdgeWeight::RawDistance => dist,
            EdgeWeight::Binary => 1.0,
        }
    }
}

/// Source of the road-connectivity relation. Moving taxis have no static
/// road incidence, so connectivity is keyed either on explicit node pairs
/// (synthetic scenarios) or on grid cells joined by a road segment.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoadConnectivity {
    #[default]
    None,
    /// Explicit undirected node-id pairs.
    NodePairs(BTreeSet<(NodeId, NodeId)>),
    /// Taxis in cells (i,j) and (k,l) are road-connected when the cell pair
    /// is listed. Cells are `floor(coord / cell_size)`.
    GridCells {
        cell_size: f64,
        cell_pairs: BTreeSet<((i64, i64), (i64, i64))>,
    },
}

/// Thresholds and weighting for snapshot construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Proximity threshold th_p in meters.
    pub proximity_threshold: f64,
    /// Destination-similarity threshold th_d in meters.
    pub destination_threshold: f64,
    #[serde(default)]
    pub weight: EdgeWeight,
    #[serde(default)]
    pub roads: RoadConnectivity,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            proximity_threshold: 100.0,
            destination_threshold: 100.0,
            weight: EdgeWeight::default(),
            roads: RoadConnectivity::default(),
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.proximity_threshold > 0.0) || !(self.destination_threshold > 0.0) {
            return Err(Error::InvalidConfig(
                "proximity/destination thresholds must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Demand/supply history tensor: `P` slots by `N` nodes by `d` channels,
/// where `d = 2 * m * n` (demand grid then supply grid, row-major).
#[derive(Debug, Clone)]
pub struct FeatureTensor {
    pub history_p: usize,
    pub horizon_q: usize,
    pub grid_m: usize,
    pub grid_n: usize,
    /// P x N x d.
    pub values: Array3<f64>,
}

impl FeatureTensor {
    pub fn channel_width(&self) -> usize {
        2 * self.grid_m * self.grid_n
    }
}

/// One time slot of the heterogeneous taxi graph. Immutable after
/// construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct HINSnapshot {
    pub time_slot: i64,
    pub nodes: Vec<TaxiNode>,
    /// Binary symmetric road-connectivity matrix.
    pub adj_connectivity: Array2<f64>,
    /// Weighted symmetric proximity matrix (nonzero iff dist < th_p).
    pub adj_proximity: Array2<f64>,
    /// Weighted symmetric destination-similarity matrix (nonzero iff dist < th_d).
    pub adj_destination: Array2<f64>,
    /// N x d per-slot feature matrix, rows aligned with `nodes`.
    pub features: Array2<f64>,
}

impl HINSnapshot {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Binary union of the three relations: 1 where any relation links the
    /// pair. This is the topology message passing physically runs on.
    pub fn union_topology(&self) -> Array2<u8> {
        union_topology(self)
    }

    /// Total undirected edges in the union topology.
    pub fn union_edge_count(&self) -> usize {
        let u = self.union_topology();
        let n = self.node_count();
        let mut count = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if u[[i, j]] != 0 {
                    count += 1;
                }
            }
        }
        count
    }

    /// Snapshot restricted to `indices` (kept in the given order), with all
    /// three adjacency blocks and feature rows copied over.
    pub fn induced(&self, indices: &[usize]) -> HINSnapshot {
        let k = indices.len();
        let d = self.features.ncols();
        let mut conn = Array2::zeros((k, k));
        let mut prox = Array2::zeros((k, k));
        let mut dest = Array2::zeros((k, k));
        let mut feats = Array2::zeros((k, d));
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                conn[[a, b]] = self.adj_connectivity[[i, j]];
                prox[[a, b]] = self.adj_proximity[[i, j]];
                dest[[a, b]] = self.adj_destination[[i, j]];
            }
            feats.row_mut(a).assign(&self.features.row(i));
        }
        HINSnapshot {
            time_slot: self.time_slot,
            nodes: indices.iter().map(|&i| self.nodes[i].clone()).collect(),
            adj_connectivity: conn,
            adj_proximity: prox,
            adj_destination: dest,
            features: feats,
        }
    }
}

fn road_connected(a: &TaxiNode, b: &TaxiNode, roads: &RoadConnectivity) -> bool {
    match roads {
        RoadConnectivity::None => false,
        RoadConnectivity::NodePairs(pairs) => {
            let key = if a.id < b.id { (a.id, b.id) } else { (b.id, a.id) };
            pairs.contains(&key)
        }
        RoadConnectivity::GridCells { cell_size, cell_pairs } => {
            let cell = |p: &Point2| {
                (
                    (p.x / cell_size).floor() as i64,
                    (p.y / cell_size).floor() as i64,
                )
            };
            let (ca, cb) = (cell(&a.position), cell(&b.position));
            let key = if ca <= cb { (ca, cb) } else { (cb, ca) };
            cell_pairs.contains(&key)
        }
    }
}

/// Build the snapshot for time slot `t` from a node list.
///
/// All three adjacency matrices come out symmetric with zero diagonal;
/// proximity/destination entries are nonzero exactly where the pairwise
/// distance is below the corresponding threshold.
pub fn build_snapshot(nodes: Vec<TaxiNode>, config: &GraphConfig, t: i64) -> Result<HINSnapshot> {
    config.validate()?;
    let mut seen = BTreeSet::new();
    for node in &nodes {
        if !seen.insert(node.id) {
            return Err(Error::DuplicateNodeId(node.id));
        }
        if !node.position.is_finite() || !node.destination.is_finite() {
            return Err(Error::NonFiniteCoordinate(node.id));
        }
    }

    let n = nodes.len();
    let width = nodes.first().map_or(0, |node| node.features.len());
    let mut conn = Array2::zeros((n, n));
    let mut prox = Array2::zeros((n, n));
    let mut dest = Array2::zeros((n, n));
    let mut feats = Array2::zeros((n, width));

    for i in 0..n {
        if nodes[i].features.len() != width {
            return Err(Error::DimensionMismatch(format!(
                "node {} carries {} features, expected {}",
                nodes[i].id,
                nodes[i].features.len(),
                width
            )));
        }
        for (c, &v) in nodes[i].features.iter().enumerate() {
            feats[[i, c]] = v;
        }
        for j in (i + 1)..n {
            if road_connected(&nodes[i], &nodes[j], &config.roads) {
                conn[[i, j]] = 1.0;
                conn[[j, i]] = 1.0;
            }
            let dp = nodes[i].position.dist(&nodes[j].position);
            if dp < config.proximity_threshold {
                let w = config.weight.weight(dp, config.proximity_threshold);
                prox[[i, j]] = w;
                prox[[j, i]] = w;
            }
            let dd = nodes[i].destination.dist(&nodes[j].destination);
            if dd < config.destination_threshold {
                let w = config.weight.weight(dd, config.destination_threshold);
                dest[[i, j]] = w;
                dest[[j, i]] = w;
            }
        }
    }

    Ok(HINSnapshot {
        time_slot: t,
        nodes,
        adj_connectivity: conn,
        adj_proximity: prox,
        adj_destination: dest,
        features: feats,
    })
}

/// Elementwise OR of the nonzero masks of the three relations.
pub fn union_topology(snapshot: &HINSnapshot) -> Array2<u8> {
    let n = snapshot.node_count();
    let mut union = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            if i != j
                && (snapshot.adj_connectivity[[i, j]] != 0.0
                    || snapshot.adj_proximity[[i, j]] != 0.0
                    || snapshot.adj_destination[[i, j]] != 0.0)
            {
                union[[i, j]] = 1;
            }
        }
    }
    union
}

/// Advance one slot: remove `departures`, relocate `moves`, append
/// `arrivals`, then rebuild the graph from scratch at `t + 1`. The input
/// snapshot is untouched.
pub fn evolve(
    snapshot: &HINSnapshot,
    arrivals: Vec<TaxiNode>,
    departures: &[NodeId],
    moves: &BTreeMap<NodeId, Point2>,
    config: &GraphConfig,
) -> Result<HINSnapshot> {
    let existing: BTreeSet<NodeId> = snapshot.nodes.iter().map(|n| n.id).collect();
    for id in departures {
        if !existing.contains(id) {
            return Err(Error::UnknownNodeId(*id));
        }
    }
    for id in moves.keys() {
        if !existing.contains(id) {
            return Err(Error::UnknownNodeId(*id));
        }
    }
    for node in &arrivals {
        if existing.contains(&node.id) {
            return Err(Error::DuplicateNodeId(node.id));
        }
    }

    let gone: BTreeSet<NodeId> = departures.iter().copied().collect();
    let mut nodes: Vec<TaxiNode> = snapshot
        .nodes
        .iter()
        .filter(|n| !gone.contains(&n.id))
        .cloned()
        .collect();
    for node in &mut nodes {
        if let Some(pos) = moves.get(&node.id) {
            node.position = *pos;
        }
    }
    nodes.extend(arrivals);
    build_snapshot(nodes, config, snapshot.time_slot + 1)
}

/// Serialized snapshot form: node list plus sparse edge lists per relation.
#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotJson {
    pub time_slot: i64,
    pub nodes: Vec<TaxiNode>,
    pub connectivity: Vec<(usize, usize, f64)>,
    pub proximity: Vec<(usize, usize, f64)>,
    pub destination: Vec<(usize, usize, f64)>,
}

impl SnapshotJson {
    pub fn from_snapshot(snapshot: &HINSnapshot) -> Self {
        let sparse = |m: &Array2<f64>| {
            let n = m.nrows();
            let mut out = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if m[[i, j]] != 0.0 {
                        out.push((i, j, m[[i, j]]));
                    }
                }
            }
            out
        };
        Self {
            time_slot: snapshot.time_slot,
            nodes: snapshot.nodes.clone(),
            connectivity: sparse(&snapshot.adj_connectivity),
            proximity: sparse(&snapshot.adj_proximity),
            destination: sparse(&snapshot.adj_destination),
        }
    }

    pub fn into_snapshot(self) -> Result<HINSnapshot> {
        let n = self.nodes.len();
        let width = self.nodes.first().map_or(0, |node| node.features.len());
        let mut feats = Array2::zeros((n, width));
        for (i, node) in self.nodes.iter().enumerate() {
            for (c, &v) in node.features.iter().enumerate() {
                feats[[i, c]] = v;
            }
        }
        let dense = |edges: &[(usize, usize, f64)]| -> Result<Array2<f64>> {
            let mut m = Array2::zeros((n, n));
            for &(i, j, w) in edges {
                if i >= n || j >= n {
                    return Err(Error::DimensionMismatch(format!(
                        "edge ({i},{j}) out of range for {n} nodes"
                    )));
                }
                m[[i, j]] = w;
                m[[j, i]] = w;
            }
            Ok(m)
        };
        Ok(HINSnapshot {
            time_slot: self.time_slot,
            adj_connectivity: dense(&self.connectivity)?,
            adj_proximity: dense(&self.proximity)?,
            adj_destination: dense(&self.destination)?,
            features: feats,
            nodes: self.nodes,
        })
    }
}

/// Project lon/lat rows to planar meters with a local equirectangular map
/// about the data centroid. Good to well under a meter at city scale.
pub fn project_lonlat(points: &[(f64, f64)]) -> Vec<Point2> {
    const EARTH_RADIUS_M: f64 = 6_371_000.0;
    if points.is_empty() {
        return Vec::new();
    }
    let n = points.len() as f64;
    let lon0 = points.iter().map(|p| p.0).sum::<f64>() / n;
    let lat0 = points.iter().map(|p| p.1).sum::<f64>() / n;
    let lat0_rad = lat0.to_radians();
    points
        .iter()
        .map(|&(lon, lat)| {
            Point2::new(
                EARTH_RADIUS_M * (lon - lon0).to_radians() * lat0_rad.cos(),
                EARTH_RADIUS_M * (lat - lat0).to_radians(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn node(id: NodeId, x: f64, y: f64) -> TaxiNode {
        TaxiNode::new(id, Point2::new(x, y), Point2::new(x, y))
    }

    fn random_nodes(count: usize, span: f64, seed: u64) -> Vec<TaxiNode> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|id| {
                TaxiNode::new(
                    id as NodeId,
                    Point2::new(rng.gen::<f64>() * span, rng.gen::<f64>() * span),
                    Point2::new(rng.gen::<f64>() * span, rng.gen::<f64>() * span),
                )
            })
            .collect()
    }

    #[test]
    fn proximity_edge_inside_threshold() {
        let snap = build_snapshot(
            vec![node(0, 0.0, 0.0), node(1, 50.0, 0.0)],
            &GraphConfig::default(),
            0,
        )
        .unwrap();
        assert!(snap.adj_proximity[[0, 1]] != 0.0);
        assert_eq!(snap.adj_proximity[[0, 1]], snap.adj_proximity[[1, 0]]);
    }

    #[test]
    fn proximity_edge_outside_threshold() {
        let snap = build_snapshot(
            vec![node(0, 0.0, 0.0), node(1, 150.0, 0.0)],
            &GraphConfig::default(),
            0,
        )
        .unwrap();
        assert_eq!(snap.adj_proximity[[0, 1]], 0.0);
    }

    #[test]
    fn unbounded_thresholds_give_complete_weighted_graphs() {
        // Brute-force pairwise oracle: with infinite thresholds and no roads
        // every off-diagonal pair is linked by proximity and destination.
        let nodes = random_nodes(5, 1000.0, 7);
        let config = GraphConfig {
            proximity_threshold: f64::INFINITY,
            destination_threshold: f64::INFINITY,
            ..GraphConfig::default()
        };
        let snap = build_snapshot(nodes.clone(), &config, 0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(snap.adj_connectivity[[i, j]], 0.0);
                let expect_edge = i != j;
                assert_eq!(snap.adj_proximity[[i, j]] != 0.0, expect_edge, "prox {i},{j}");
                assert_eq!(snap.adj_destination[[i, j]] != 0.0, expect_edge, "dest {i},{j}");
                if i != j {
                    let d = nodes[i].position.dist(&nodes[j].position);
                    assert!((snap.adj_proximity[[i, j]] - (-(d * d) / f64::INFINITY).exp()).abs() < 1e-12
                        || snap.adj_proximity[[i, j]] > 0.0);
                }
            }
        }
    }

    #[test]
    fn thresholds_match_brute_force_distance_loop() {
        let nodes = random_nodes(40, 400.0, 11);
        let config = GraphConfig::default();
        let snap = build_snapshot(nodes.clone(), &config, 0).unwrap();
        for i in 0..40 {
            for j in 0..40 {
                if i == j {
                    assert_eq!(snap.adj_proximity[[i, j]], 0.0);
                    assert_eq!(snap.adj_destination[[i, j]], 0.0);
                    continue;
                }
                let dp = nodes[i].position.dist(&nodes[j].position);
                let dd = nodes[i].destination.dist(&nodes[j].destination);
                assert_eq!(snap.adj_proximity[[i, j]] != 0.0, dp < config.proximity_threshold);
                assert_eq!(snap.adj_destination[[i, j]] != 0.0, dd < config.destination_threshold);
            }
        }
    }

    #[test]
    fn duplicate_and_nonfinite_nodes_rejected() {
        let err = build_snapshot(
            vec![node(3, 0.0, 0.0), node(3, 1.0, 1.0)],
            &GraphConfig::default(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateNodeId(3)));

        let err = build_snapshot(
            vec![node(0, f64::NAN, 0.0)],
            &GraphConfig::default(),
            0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonFiniteCoordinate(0)));
    }

    #[test]
    fn union_is_elementwise_or() {
        let mut pairs = BTreeSet::new();
        pairs.insert((0, 1));
        let config = GraphConfig {
            proximity_threshold: 1e-6,
            destination_threshold: 1e-6,
            roads: RoadConnectivity::NodePairs(pairs),
            ..GraphConfig::default()
        };
        let snap = build_snapshot(vec![node(0, 0.0, 0.0), node(1, 500.0, 0.0)], &config, 0).unwrap();
        assert_eq!(snap.adj_proximity[[0, 1]], 0.0);
        assert_eq!(snap.union_topology()[[0, 1]], 1);

        // Random snapshot: union equals OR of nonzero masks.
        let nodes = random_nodes(10, 250.0, 3);
        let snap = build_snapshot(nodes, &GraphConfig::default(), 0).unwrap();
        let union = snap.union_topology();
        for i in 0..10 {
            for j in 0..10 {
                let expect = i != j
                    && (snap.adj_connectivity[[i, j]] != 0.0
                        || snap.adj_proximity[[i, j]] != 0.0
                        || snap.adj_destination[[i, j]] != 0.0);
                assert_eq!(union[[i, j]] != 0, expect);
            }
        }
    }

    #[test]
    fn union_of_empty_graph_is_zero() {
        let config = GraphConfig {
            proximity_threshold: 1e-9,
            destination_threshold: 1e-9,
            ..GraphConfig::default()
        };
        let snap = build_snapshot(random_nodes(6, 1000.0, 5), &config, 0).unwrap();
        assert!(snap.union_topology().iter().all(|&v| v == 0));
    }

    #[test]
    fn identity_evolution_preserves_graph() {
        let snap = build_snapshot(random_nodes(12, 300.0, 9), &GraphConfig::default(), 4).unwrap();
        let next = evolve(&snap, vec![], &[], &BTreeMap::new(), &GraphConfig::default()).unwrap();
        assert_eq!(next.time_slot, 5);
        assert_eq!(next.adj_proximity, snap.adj_proximity);
        assert_eq!(next.adj_destination, snap.adj_destination);
        assert_eq!(next.adj_connectivity, snap.adj_connectivity);
    }

    #[test]
    fn departing_the_only_hub_leaves_no_edges() {
        // Node 0 sits within range of 1 and 2, which are far from each other.
        let nodes = vec![node(0, 0.0, 0.0), node(1, 90.0, 0.0), node(2, -90.0, 0.0)];
        let snap = build_snapshot(nodes, &GraphConfig::default(), 0).unwrap();
        assert_eq!(snap.union_edge_count(), 2);
        let next = evolve(&snap, vec![], &[0], &BTreeMap::new(), &GraphConfig::default()).unwrap();
        assert_eq!(next.union_edge_count(), 0);
    }

    #[test]
    fn moving_out_of_range_clears_row_against_rebuild_oracle() {
        let nodes = random_nodes(8, 150.0, 13);
        let config = GraphConfig::default();
        let snap = build_snapshot(nodes.clone(), &config, 0).unwrap();
        let mut moves = BTreeMap::new();
        moves.insert(2 as NodeId, Point2::new(1e6, 1e6));
        let evolved = evolve(&snap, vec![], &[], &moves, &config).unwrap();

        // Oracle: rebuild from scratch with the same node set.
        let mut rebuilt_nodes = nodes;
        rebuilt_nodes[2].position = Point2::new(1e6, 1e6);
        let rebuilt = build_snapshot(rebuilt_nodes, &config, 1).unwrap();
        assert_eq!(evolved.adj_proximity, rebuilt.adj_proximity);
        let idx = evolved.index_of(2).unwrap();
        for j in 0..8 {
            assert_eq!(evolved.adj_proximity[[idx, j]], 0.0);
        }
    }

    #[test]
    fn evolve_rejects_unknown_ids() {
        let snap = build_snapshot(random_nodes(3, 100.0, 1), &GraphConfig::default(), 0).unwrap();
        assert!(matches!(
            evolve(&snap, vec![], &[99], &BTreeMap::new(), &GraphConfig::default()),
            Err(Error::UnknownNodeId(99))
        ));
        let mut moves = BTreeMap::new();
        moves.insert(42, Point2::new(0.0, 0.0));
        assert!(matches!(
            evolve(&snap, vec![], &[], &moves, &GraphConfig::default()),
            Err(Error::UnknownNodeId(42))
        ));
    }

    #[test]
    fn relabeling_permutes_adjacency_rows() {
        let nodes = random_nodes(9, 200.0, 21);
        let config = GraphConfig::default();
        let snap = build_snapshot(nodes.clone(), &config, 0).unwrap();
        // Reverse the node order; adjacency must permute identically.
        let reversed: Vec<TaxiNode> = nodes.into_iter().rev().collect();
        let snap_rev = build_snapshot(reversed, &config, 0).unwrap();
        let n = 9;
        for i in 0..n {
            for j in 0..n {
                assert_eq!(
                    snap.adj_proximity[[i, j]],
                    snap_rev.adj_proximity[[n - 1 - i, n - 1 - j]]
                );
            }
        }
    }

    #[test]
    fn snapshot_json_round_trip() {
        let snap = build_snapshot(random_nodes(15, 250.0, 17), &GraphConfig::default(), 3).unwrap();
        let json = serde_json::to_string(&SnapshotJson::from_snapshot(&snap)).unwrap();
        let back: SnapshotJson = serde_json::from_str(&json).unwrap();
        let restored = back.into_snapshot().unwrap();
        assert_eq!(restored.time_slot, snap.time_slot);
        assert_eq!(restored.adj_proximity, snap.adj_proximity);
        assert_eq!(restored.adj_destination, snap.adj_destination);
        assert_eq!(restored.features, snap.features);
    }

    #[test]
    fn lonlat_projection_is_metric_at_city_scale() {
        // Two points ~111 m apart along a meridian.
        let pts = project_lonlat(&[(-74.0, 40.7), (-74.0, 40.701)]);
        let d = pts[0].dist(&pts[1]);
        assert!((d - 111.2).abs() < 1.0, "got {d}");
    }
}

