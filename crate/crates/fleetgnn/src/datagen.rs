//! Scenario substrates: seeded synthetic fleets and NYC-style trip records.
//!
//! Both produce slot-indexed snapshot sequences whose per-node features are
//! the demand and supply counts of the m x n grid cells around each taxi.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::hin::{build_snapshot, project_lonlat, GraphConfig, HINSnapshot, Point2, TaxiNode};
use crate::{Error, Result};

/// Vacancy attribution window after a dropoff.
const IDLE_CAP_MINUTES: i64 = 30;

/// Vicinity grid dimensions (cells around each taxi).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VicinityDims {
    pub m: usize,
    pub n: usize,
}

impl Default for VicinityDims {
    fn default() -> Self {
        Self { m: 3, n: 3 }
    }
}

impl VicinityDims {
    /// Feature width: demand plus supply channels over the grid.
    pub fn feature_width(&self) -> usize {
        2 * self.m * self.n
    }
}

/// A Gaussian demand hotspot.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Hotspot {
    pub center: Point2,
    pub sigma: f64,
    /// Peak Poisson rate contributed per cell per slot.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mobility {
    #[default]
    Static,
    /// Move toward the destination each slot; pick a fresh destination on
    /// arrival.
    RandomWaypoint,
}

/// Synthetic fleet generator parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FleetGenConfig {
    pub taxis: usize,
    pub area_width: f64,
    pub area_height: f64,
    pub mobility: Mobility,
    /// Taxi speed for the waypoint model, meters per second.
    pub speed_mps: f64,
    pub hotspots: Vec<Hotspot>,
    /// Uniform Poisson rate added to every cell.
    pub base_demand_rate: f64,
    /// When nonzero, initial taxi positions bunch around this many seeded
    /// cluster centers instead of spreading uniformly.
    pub position_clusters: usize,
    /// Spatial spread of each position cluster.
    pub cluster_sigma: f64,
    /// Place cluster centers on a jittered (cols, rows) lattice instead of
    /// uniformly at random: one hotspot per district, membership balanced
    /// round-robin. Overrides `position_clusters` when set.
    pub cluster_lattice: Option<(usize, usize)>,
    /// Center jitter (std, meters) for the lattice layout.
    pub cluster_jitter: f64,
    /// Deterministic shift applied to every lattice center, so hotspots can
    /// sit near district borders.
    pub cluster_offset_x: f64,
    pub cluster_offset_y: f64,
    pub seed: u64,
    pub slot_minutes: u32,
    pub vicinity: VicinityDims,
    pub cell_size: f64,
}

impl Default for FleetGenConfig {
    fn default() -> Self {
        Self {
            taxis: 64,
            area_width: 1000.0,
            area_height: 1000.0,
            mobility: Mobility::Static,
            speed_mps: 8.0,
            hotspots: vec![],
            base_demand_rate: 0.2,
            position_clusters: 0,
            cluster_sigma: 80.0,
            cluster_lattice: None,
            cluster_jitter: 0.0,
            cluster_offset_x: 0.0,
            cluster_offset_y: 0.0,
            seed: 0,
            slot_minutes: 15,
            vicinity: VicinityDims::default(),
            cell_size: 100.0,
        }
    }
}

impl FleetGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taxis == 0 {
            return Err(Error::InvalidConfig("need at least one taxi".into()));
        }
        if !(self.area_width > 0.0) || !(self.area_height > 0.0) {
            return Err(Error::InvalidConfig("area dimensions must be positive".into()));
        }
        if self.vicinity.m == 0 || self.vicinity.n == 0 || !(self.cell_size > 0.0) {
            return Err(Error::InvalidConfig("vicinity grid must be positive".into()));
        }
        Ok(())
    }
}

/// A generated or ingested slot sequence.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub slots: Vec<HINSnapshot>,
    pub vicinity: VicinityDims,
}

impl ScenarioData {
    /// First `p` slots as the model's history window.
    pub fn window(&self, p: usize) -> &[HINSnapshot] {
        &self.slots[..p.min(self.slots.len())]
    }

    /// History window packed as a feature tensor (P x N x d).
    pub fn feature_tensor(&self, p: usize, q: usize) -> Result<crate::hin::FeatureTensor> {
        if p == 0 || p > self.slots.len() {
            return Err(Error::InvalidConfig(format!(
                "history window {p} not available from {} slots",
                self.slots.len()
            )));
        }
        let n = self.slots[0].node_count();
        let d = self.slots[0].features.ncols();
        let mut values = ndarray::Array3::zeros((p, n, d));
        for (t, snap) in self.slots[..p].iter().enumerate() {
            if snap.node_count() != n {
                return Err(Error::InconsistentWindow("window slots differ in node count".into()));
            }
            for i in 0..n {
                for c in 0..d {
                    values[[t, i, c]] = snap.features[[i, c]];
                }
            }
        }
        Ok(crate::hin::FeatureTensor {
            history_p: p,
            horizon_q: q,
            grid_m: self.vicinity.m,
            grid_n: self.vicinity.n,
            values,
        })
    }

    /// Per-node truth features of slots `p..p+q` as a Q x N x d tensor.
    pub fn truth(&self, p: usize, q: usize) -> Result<ndarray::Array3<f64>> {
        if p + q > self.slots.len() {
            return Err(Error::InvalidConfig(format!(
                "need {} slots for history {p} + horizon {q}, have {}",
                p + q,
                self.slots.len()
            )));
        }
        let n = self.slots[p].node_count();
        let d = self.slots[p].features.ncols();
        let mut out = ndarray::Array3::zeros((q, n, d));
        for step in 0..q {
            let snap = &self.slots[p + step];
            if snap.node_count() != n {
                return Err(Error::InconsistentWindow("truth slots differ in node count".into()));
            }
            for i in 0..n {
                for c in 0..d {
                    out[[step, i, c]] = snap.features[[i, c]];
                }
            }
        }
        Ok(out)
    }
}

fn cell_of(p: &Point2, cell_size: f64) -> (i64, i64) {
    ((p.x / cell_size).floor() as i64, (p.y / cell_size).floor() as i64)
}

/// Vicinity feature vector of a node: the m x n demand grid then the m x n
/// supply grid, row-major, centered on the node's cell.
fn vicinity_features(
    pos: &Point2,
    demand: &BTreeMap<(i64, i64), f64>,
    supply: &BTreeMap<(i64, i64), f64>,
    dims: &VicinityDims,
    cell_size: f64,
) -> Vec<f64> {
    let (ci, cj) = cell_of(pos, cell_size);
    let (m, n) = (dims.m as i64, dims.n as i64);
    let mut out = Vec::with_capacity(dims.feature_width());
    for grid in [demand, supply] {
        for di in 0..m {
            for dj in 0..n {
                let cell = (ci + di - m / 2, cj + dj - n / 2);
                out.push(grid.get(&cell).copied().unwrap_or(0.0));
            }
        }
    }
    out
}

/// Generate `slots` snapshots of a synthetic fleet. Deterministic for a
/// given seed: positions, destinations, and Poisson demand draws all come
/// from one seeded stream.
pub fn generate(config: &FleetGenConfig, graph: &GraphConfig, slots: usize) -> Result<ScenarioData> {
    config.validate()?;
    graph.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let centers: Vec<Point2> = if let Some((cols, rows)) = config.cluster_lattice {
        let mut centers = Vec::with_capacity(cols * rows);
        for r in 0..rows {
            for c in 0..cols {
                let base = Point2::new(
                    (c as f64 + 0.5) * config.area_width / cols as f64 + config.cluster_offset_x,
                    (r as f64 + 0.5) * config.area_height / rows as f64 + config.cluster_offset_y,
                );
                let jitter = rand_distr::Normal::new(0.0, config.cluster_jitter.max(1e-12)).unwrap();
                centers.push(Point2::new(
                    (base.x + jitter.sample(&mut rng)).clamp(0.0, config.area_width),
                    (base.y + jitter.sample(&mut rng)).clamp(0.0, config.area_height),
                ));
            }
        }
        centers
    } else {
        (0..config.position_clusters)
            .map(|_| {
                Point2::new(
                    rng.gen::<f64>() * config.area_width,
                    rng.gen::<f64>() * config.area_height,
                )
            })
            .collect()
    };
    let mut positions: Vec<Point2> = if centers.is_empty() {
        (0..config.taxis)
            .map(|_| {
                Point2::new(
                    rng.gen::<f64>() * config.area_width,
                    rng.gen::<f64>() * config.area_height,
                )
            })
            .collect()
    } else {
        (0..config.taxis)
            .map(|i| {
                let c = centers[i % centers.len()];
                let (dx, dy) = (
                    rand_distr::Normal::new(0.0, config.cluster_sigma)
                        .unwrap()
                        .sample(&mut rng),
                    rand_distr::Normal::new(0.0, config.cluster_sigma)
                        .unwrap()
                        .sample(&mut rng),
                );
                Point2::new(
                    (c.x + dx).clamp(0.0, config.area_width),
                    (c.y + dy).clamp(0.0, config.area_height),
                )
            })
            .collect()
    };
    let mut destinations: Vec<Point2> = (0..config.taxis)
        .map(|_| {
            Point2::new(
                rng.gen::<f64>() * config.area_width,
                rng.gen::<f64>() * config.area_height,
            )
        })
        .collect();

    let cells_x = (config.area_width / config.cell_size).ceil() as i64;
    let cells_y = (config.area_height / config.cell_size).ceil() as i64;
    let mut out = Vec::with_capacity(slots);
    for t in 0..slots {
        // Demand field: base rate plus hotspot kernels, Poisson-sampled.
        let mut demand: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for ci in 0..cells_x {
            for cj in 0..cells_y {
                let center = Point2::new(
                    (ci as f64 + 0.5) * config.cell_size,
                    (cj as f64 + 0.5) * config.cell_size,
                );
                let mut rate = config.base_demand_rate;
                for h in &config.hotspots {
                    let d = center.dist(&h.center);
                    rate += h.rate * (-(d * d) / (2.0 * h.sigma * h.sigma)).exp();
                }
                let count = if rate > 0.0 {
                    Poisson::new(rate)
                        .map_err(|e| Error::InvalidConfig(format!("demand rate: {e}")))?
                        .sample(&mut rng)
                } else {
                    0.0
                };
                if count > 0.0 {
                    demand.insert((ci, cj), count);
                }
            }
        }
        // Supply: taxis per cell.
        let mut supply: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        for pos in &positions {
            *supply.entry(cell_of(pos, config.cell_size)).or_insert(0.0) += 1.0;
        }

        let nodes: Vec<TaxiNode> = (0..config.taxis)
            .map(|i| {
                let mut node = TaxiNode::new(i as u64, positions[i], destinations[i]);
                node.features =
                    vicinity_features(&positions[i], &demand, &supply, &config.vicinity, config.cell_size);
                node
            })
            .collect();
        out.push(build_snapshot(nodes, graph, t as i64)?);

        if config.mobility == Mobility::RandomWaypoint {
            let step = config.speed_mps * config.slot_minutes as f64 * 60.0;
            for i in 0..config.taxis {
                let to_dest = positions[i].dist(&destinations[i]);
                if to_dest <= step {
                    positions[i] = destinations[i];
                    destinations[i] = Point2::new(
                        rng.gen::<f64>() * config.area_width,
                        rng.gen::<f64>() * config.area_height,
                    );
                } else {
                    let f = step / to_dest;
                    positions[i] = Point2::new(
                        positions[i].x + f * (destinations[i].x - positions[i].x),
                        positions[i].y + f * (destinations[i].y - positions[i].y),
                    );
                }
            }
        }
    }
    Ok(ScenarioData { slots: out, vicinity: config.vicinity })
}

/// One parsed trip record.
#[derive(Debug, Deserialize)]
struct TripRow {
    pickup_datetime: String,
    dropoff_datetime: String,
    pickup_longitude: f64,
    pickup_latitude: f64,
    dropoff_longitude: f64,
    dropoff_latitude: f64,
    #[allow(dead_code)]
    trip_distance: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IngestDiagnostics {
    pub rows_total: usize,
    pub rows_valid: usize,
    pub rows_skipped: usize,
    pub pickups_binned: usize,
    pub slots: usize,
}

/// Trip-record ingestion output.
#[derive(Debug)]
pub struct IngestedTrips {
    pub data: ScenarioData,
    pub diagnostics: IngestDiagnostics,
    /// Global demand grid per slot (pickup counts per cell).
    pub demand_by_slot: Vec<BTreeMap<(i64, i64), f64>>,
}

struct Trip {
    pickup_ts: i64,
    dropoff_ts: i64,
    pickup: Point2,
    dropoff: Point2,
}

fn parse_ts(s: &str) -> Option<i64> {
    chrono::NaiveDateTime::parse_from_str(s.trim(), "%Y-%m-%d %H:%M:%S")
        .ok()
        .map(|dt| dt.and_utc().timestamp())
}

/// Ingest a trip-record CSV into time-slotted snapshots.
///
/// Pickups bin into their slot's cell as demand; a dropped-off taxi counts
/// as supply in its dropoff cell until it idles out (30 minutes). Taxis are
/// instantiated from trips in progress during each slot, positioned by
/// linear interpolation between pickup and dropoff, destination at the
/// dropoff point. Malformed rows are skipped and counted.
pub fn ingest_trips(
    path: &Path,
    slot_minutes: u32,
    vicinity: VicinityDims,
    cell_size: f64,
    graph: &GraphConfig,
) -> Result<IngestedTrips> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    for required in [
        "pickup_datetime",
        "dropoff_datetime",
        "pickup_longitude",
        "pickup_latitude",
        "dropoff_longitude",
        "dropoff_latitude",
        "trip_distance",
    ] {
        if !headers.iter().any(|h| h == required) {
            return Err(Error::TripIngest(format!("missing column {required}")));
        }
    }

    let mut diagnostics = IngestDiagnostics::default();
    let mut raw: Vec<(i64, i64, (f64, f64), (f64, f64))> = Vec::new();
    for record in reader.deserialize::<TripRow>() {
        diagnostics.rows_total += 1;
        let row = match record {
            Ok(r) => r,
            Err(_) => {
                diagnostics.rows_skipped += 1;
                continue;
            }
        };
        let (Some(pickup_ts), Some(dropoff_ts)) =
            (parse_ts(&row.pickup_datetime), parse_ts(&row.dropoff_datetime))
        else {
            diagnostics.rows_skipped += 1;
            continue;
        };
        let coords_ok = [
            row.pickup_longitude,
            row.pickup_latitude,
            row.dropoff_longitude,
            row.dropoff_latitude,
        ]
        .iter()
        .all(|v| v.is_finite());
        if dropoff_ts < pickup_ts || !coords_ok {
            diagnostics.rows_skipped += 1;
            continue;
        }
        diagnostics.rows_valid += 1;
        raw.push((
            pickup_ts,
            dropoff_ts,
            (row.pickup_longitude, row.pickup_latitude),
            (row.dropoff_longitude, row.dropoff_latitude),
        ));
    }

    if raw.is_empty() {
        return Ok(IngestedTrips {
            data: ScenarioData { slots: Vec::new(), vicinity },
            diagnostics,
            demand_by_slot: Vec::new(),
        });
    }

    // Project all endpoints in one frame.
    let mut lonlat: Vec<(f64, f64)> = Vec::with_capacity(raw.len() * 2);
    for r in &raw {
        lonlat.push(r.2);
        lonlat.push(r.3);
    }
    let projected = project_lonlat(&lonlat);
    let trips: Vec<Trip> = raw
        .iter()
        .enumerate()
        .map(|(i, r)| Trip {
            pickup_ts: r.0,
            dropoff_ts: r.1,
            pickup: projected[2 * i],
            dropoff: projected[2 * i + 1],
        })
        .collect();

    let slot_secs = slot_minutes as i64 * 60;
    let t0 = trips.iter().map(|t| t.pickup_ts).min().unwrap();
    let t1 = trips.iter().map(|t| t.dropoff_ts).max().unwrap();
    let first_slot = t0.div_euclid(slot_secs);
    let last_slot = t1.div_euclid(slot_secs);
    let idle_cap = IDLE_CAP_MINUTES * 60;

    let mut slots = Vec::new();
    let mut demand_by_slot = Vec::new();
    for slot in first_slot..=last_slot {
        let start = slot * slot_secs;
        let end = start + slot_secs;
        let mid = start + slot_secs / 2;

        let mut demand: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        let mut supply: BTreeMap<(i64, i64), f64> = BTreeMap::new();
        let mut nodes = Vec::new();
        for (id, trip) in trips.iter().enumerate() {
            if trip.pickup_ts >= start && trip.pickup_ts < end {
                *demand.entry(cell_of(&trip.pickup, cell_size)).or_insert(0.0) += 1.0;
                diagnostics.pickups_binned += 1;
            }
            // Vacancy: dropoff until idle cap.
            if trip.dropoff_ts < end && trip.dropoff_ts + idle_cap > start {
                *supply.entry(cell_of(&trip.dropoff, cell_size)).or_insert(0.0) += 1.0;
            }
            // Active trip during this slot: instantiate a taxi.
            if trip.pickup_ts < end && trip.dropoff_ts >= start {
                let span = (trip.dropoff_ts - trip.pickup_ts).max(1) as f64;
                let f = ((mid - trip.pickup_ts) as f64 / span).clamp(0.0, 1.0);
                let pos = Point2::new(
                    trip.pickup.x + f * (trip.dropoff.x - trip.pickup.x),
                    trip.pickup.y + f * (trip.dropoff.y - trip.pickup.y),
                );
                nodes.push(TaxiNode::new(id as u64, pos, trip.dropoff));
            }
        }
        for node in &mut nodes {
            node.features = vicinity_features(&node.position, &demand, &supply, &vicinity, cell_size);
        }
        slots.push(build_snapshot(nodes, graph, slot - first_slot)?);
        demand_by_slot.push(demand);
    }
    diagnostics.slots = slots.len();
    Ok(IngestedTrips {
        data: ScenarioData { slots, vicinity },
        diagnostics,
        demand_by_slot,
    })
}
