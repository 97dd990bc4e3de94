//! Declarative experiment runner.
//!
//! A scenario file (TOML or JSON) names the substrate (synthetic fleet or
//! trip records), the graph/delay/model constants, and the experiment
//! matrix. `run` executes it and writes plot-ready artifacts: `delays.csv`,
//! `bounds.csv`, `assignment.json`, optional `predictions.bin`, and a
//! `summary.json` that echoes every effective config value plus a content
//! hash for provenance. Outputs carry no timestamps, so a rerun with the
//! same seeds is byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::{self, FleetGenConfig};
use crate::engine::{self, EngineInputs, SweepSpec};
use crate::hin::{GraphConfig, Point2};
use crate::model::{self, ModelConfig};
use crate::netdelay::DelayModel;
use crate::partition::{
    adaptive_assign, grid_regions, uniform_assign, AdaptiveConfig, AssignmentJson, CLNRegion, Rect,
};
use crate::{Error, Result};

/// One field-level validation finding.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    /// Delay comparison of all settings over L values and trials.
    #[default]
    Sweep,
    /// Uniform vs repartitioned assignment on one snapshot.
    AssignmentShowcase,
    /// Forecast metrics on a large graph over a weight-seed sweep.
    Generalization,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub l_values: Vec<usize>,
    pub trials: usize,
    pub comm_range: f64,
    /// Cloudlet grids (cols, rows) to compare.
    pub cln_grids: Vec<(usize, usize)>,
    pub include_assignment_cost: bool,
    /// Peer-to-peer simulation root cap per trial; all roots when absent.
    pub root_sample: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            l_values: vec![1, 2, 3, 4, 5],
            trials: 10,
            comm_range: 100.0,
            cln_grids: vec![(5, 2)],
            include_assignment_cost: true,
            root_sample: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneralizationSection {
    pub weight_seeds: Vec<u64>,
    pub history_p: usize,
}

impl Default for GeneralizationSection {
    fn default() -> Self {
        Self { weight_seeds: vec![0, 1, 2, 3], history_p: 4 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dump_predictions: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripsSection {
    pub path: String,
    #[serde(default = "default_slot_minutes")]
    pub slot_minutes: u32,
    #[serde(default = "default_cell_size")]
    pub cell_size: f64,
}

fn default_slot_minutes() -> u32 {
    15
}

fn default_cell_size() -> f64 {
    200.0
}

/// Explicit region rectangle, alternative to grid-generated cells.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub id: u32,
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl RegionSpec {
    pub fn to_region(self) -> CLNRegion {
        CLNRegion::new(
            self.id,
            Rect::new(Point2::new(self.min_x, self.min_y), Point2::new(self.max_x, self.max_y)),
        )
    }
}

/// Complete experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioFile {
    pub name: String,
    pub kind: RunKind,
    pub seed: u64,
    pub fleet: FleetGenConfig,
    pub trips: Option<TripsSection>,
    pub graph: GraphConfig,
    pub delay: DelayModel,
    pub model: ModelConfig,
    pub sweep: SweepSection,
    pub generalization: GeneralizationSection,
    pub regions: Option<Vec<RegionSpec>>,
    pub output: OutputSection,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            kind: RunKind::default(),
            seed: 0,
            fleet: FleetGenConfig::default(),
            trips: None,
            graph: GraphConfig::default(),
            delay: DelayModel::default(),
            model: ModelConfig::default(),
            sweep: SweepSection::default(),
            generalization: GeneralizationSection::default(),
            regions: None,
            output: OutputSection::default(),
        }
    }
}

/// Parse a scenario from TOML or JSON by file extension (TOML otherwise).
pub fn parse_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        toml::from_str(&text).map_err(|e| Error::Toml(e.to_string()))
    }
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioFile> {
    toml::from_str(text).map_err(|e| Error::Toml(e.to_string()))
}

/// Shipped scenario presets.
pub const PRESET_NAMES: [&str; 4] = ["fig4", "fig6", "fig7", "gen"];

pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "fig4" => Some(include_str!("../presets/fig4.toml")),
        "fig6" => Some(include_str!("../presets/fig6.toml")),
        "fig7" => Some(include_str!("../presets/fig7.toml")),
        "gen" => Some(include_str!("../presets/gen.toml")),
        _ => None,
    }
}

/// Schema-independent cross-field checks; empty means valid.
pub fn validate(file: &ScenarioFile) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |field: &str, message: String| {
        out.push(Diagnostic { field: field.to_string(), message });
    };

    if file.graph.validate().is_err() {
        push("graph.proximity_threshold", "thresholds must be positive".into());
    }
    if let Err(e) = file.delay.validate() {
        push("delay", e.to_string());
    }
    if let Err(e) = file.fleet.validate() {
        push("fleet", e.to_string());
    }
    if !(file.sweep.comm_range > 0.0) {
        push("sweep.comm_range", "communication range must be positive".into());
    }
    if file.kind == RunKind::Sweep && file.sweep.l_values.is_empty() {
        push("sweep.l_values", "layer sweep must be nonempty".into());
    }
    if file.sweep.l_values.iter().any(|&l| l == 0) {
        push("sweep.l_values", "layer counts must be >= 1".into());
    }
    if file.sweep.cln_grids.iter().any(|&(c, r)| c == 0 || r == 0) {
        push("sweep.cln_grids", "grid dimensions must be >= 1".into());
    }
    if file.model.validate().is_err() {
        push("model", "model dimensions must be >= 1".into());
    }
    let needs_model = file.kind == RunKind::Generalization || file.output.dump_predictions;
    if needs_model && file.trips.is_none() {
        let width = file.fleet.vicinity.feature_width();
        if file.model.input_dim != width {
            push(
                "model.input_dim",
                format!("must equal the fleet feature width 2*m*n = {width}"),
            );
        }
        let slots_needed = file.generalization.history_p + file.model.horizon;
        if file.kind == RunKind::Generalization && file.generalization.weight_seeds.is_empty() {
            push("generalization.weight_seeds", "seed sweep must be nonempty".into());
        }
        let _ = slots_needed;
    }

    if let Some(regions) = &file.regions {
        // Tiling: pairwise interiors disjoint and areas sum to the fleet area.
        let mut total = 0.0;
        for r in regions {
            if r.max_x <= r.min_x || r.max_y <= r.min_y {
                push("regions", format!("region {} has nonpositive extent", r.id));
            }
            total += (r.max_x - r.min_x) * (r.max_y - r.min_y);
        }
        for (i, a) in regions.iter().enumerate() {
            for b in regions.iter().skip(i + 1) {
                let x = a.max_x.min(b.max_x) - a.min_x.max(b.min_x);
                let y = a.max_y.min(b.max_y) - a.min_y.max(b.min_y);
                if x > 0.0 && y > 0.0 {
                    push("regions", format!("regions {} and {} overlap", a.id, b.id));
                }
            }
        }
        let area = file.fleet.area_width * file.fleet.area_height;
        if (total - area).abs() > 1e-6 * area.max(1.0) {
            push(
                "regions",
                format!("regions cover {total} m^2 but the area is {area} m^2"),
            );
        }
    }
    out
}

/// Where the artifacts of a run ended up.
#[derive(Debug, Clone, Serialize)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub provenance_hash: String,
}

fn provenance_hash(file: &ScenarioFile) -> Result<String> {
    let canonical = serde_json::to_vec(file)?;
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    Ok(format!("{:x}", hasher.finalize()))
}

fn write_delays_csv(path: &Path, rows: &[engine::DelayRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        "setting,l,trial,total,uplink,compute,exchange,downlink,protocol,inter_cln_edges,boundary_fraction\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}",
            r.setting,
            r.l,
            r.trial,
            r.total_ms,
            r.uplink_ms,
            r.compute_ms,
            r.exchange_ms,
            r.downlink_ms,
            r.protocol_ms,
            r.inter_cln_edges,
            r.boundary_fraction
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_bounds_csv(path: &Path, rows: &[engine::BoundsRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str("l,trial,lower,actual,upper\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6}",
            r.l, r.trial, r.lower_ms, r.actual_ms, r.upper_ms
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Binary tensor dump: magic, ndim, dims, little-endian f64 payload.
fn write_tensor_bin(path: &Path, tensor: &ndarray::Array3<f64>) -> Result<()> {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(b"FGT1");
    let dims = tensor.dim();
    bytes.extend_from_slice(&(3u32).to_le_bytes());
    for d in [dims.0, dims.1, dims.2] {
        bytes.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for v in tensor.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

#[derive(Serialize)]
struct AssignmentArtifact {
    regions: Vec<CLNRegion>,
    uniform: AssignmentJson,
    uniform_cut: usize,
    adaptive: AssignmentJson,
    adaptive_cut: usize,
    protocol_cost_ms: f64,
}

#[derive(Serialize)]
struct SummaryJson<'a> {
    name: &'a str,
    kind: RunKind,
    provenance_hash: &'a str,
    /// Every effective config value, defaults included.
    effective_config: &'a ScenarioFile,
    artifacts: &'a [String],
    notes: Vec<String>,
}

/// Execute a scenario and write its artifacts under `out_dir`.
pub fn run(file: &ScenarioFile, out_dir: &Path, seed_override: Option<u64>) -> Result<RunArtifacts> {
    let mut file = file.clone();
    if let Some(seed) = seed_override {
        file.seed = seed;
    }
    file.fleet.seed = file.seed;

    let diagnostics = validate(&file);
    if !diagnostics.is_empty() {
        return Err(Error::Validation(diagnostics));
    }
    std::fs::create_dir_all(out_dir)?;
    let hash = provenance_hash(&file)?;
    let mut files = Vec::new();

    match file.kind {
        RunKind::Sweep => {
            let spec = SweepSpec {
                fleet: file.fleet.clone(),
                graph: file.graph.clone(),
                delay: file.delay.clone(),
                comm_range: file.sweep.comm_range,
                l_values: file.sweep.l_values.clone(),
                trials: file.sweep.trials,
                cln_grids: file.sweep.cln_grids.clone(),
                include_assignment_cost: file.sweep.include_assignment_cost,
                root_sample: file.sweep.root_sample,
            };
            let report = engine::compare_settings(&spec)?;
            write_delays_csv(&out_dir.join("delays.csv"), &report.delays)?;
            files.push("delays.csv".into());
            write_bounds_csv(&out_dir.join("bounds.csv"), &report.bounds)?;
            files.push("bounds.csv".into());

            if let Some(&(cols, rows)) = file.sweep.cln_grids.first() {
                write_assignment_artifact(&file, cols, rows, out_dir)?;
                files.push("assignment.json".into());
            }
            if file.output.dump_predictions {
                let p = file.generalization.history_p;
                let data = datagen::generate(&file.fleet, &file.graph, p)?;
                let weights = model::init_weights(&file.model)?;
                let inputs = EngineInputs {
                    window: data.window(p),
                    model_config: &file.model,
                    weights: &weights,
                    delay: &file.delay,
                };
                let report = engine::run_centralized(&inputs)?;
                write_tensor_bin(&out_dir.join("predictions.bin"), &report.predictions)?;
                files.push("predictions.bin".into());
            }
        }
        RunKind::AssignmentShowcase => {
            let (cols, rows) = file.sweep.cln_grids.first().copied().unwrap_or((5, 2));
            write_assignment_artifact(&file, cols, rows, out_dir)?;
            files.push("assignment.json".into());
        }
        RunKind::Generalization => {
            let p = file.generalization.history_p;
            let q = file.model.horizon;
            let data = datagen::generate(&file.fleet, &file.graph, p + q)?;
            let truth = data.truth(p, q)?;
            let mut out = String::from("weight_seed,rmse,mae,mape,mape_excluded\n");
            for &seed in &file.generalization.weight_seeds {
                let config = ModelConfig { weight_seed: seed, ..file.model.clone() };
                let weights = model::init_weights(&config)?;
                let inputs = EngineInputs {
                    window: data.window(p),
                    model_config: &config,
                    weights: &weights,
                    delay: &file.delay,
                };
                let report = engine::run_centralized(&inputs)?;
                let truth_flat: Vec<f64> = truth.iter().copied().collect();
                let pred_flat: Vec<f64> = report.predictions.iter().copied().collect();
                let m = model::metrics(&truth_flat, &pred_flat)?;
                writeln!(
                    out,
                    "{seed},{:.6},{:.6},{:.6},{}",
                    m.rmse, m.mae, m.mape, m.mape_excluded
                )
                .expect("string write");
            }
            std::fs::write(out_dir.join("metrics.csv"), out)?;
            files.push("metrics.csv".into());
        }
    }

    let notes = vec![
        format!(
            "delay constants: t_c={} ms/message, tau={} ms/node-message, cloudlet_slowdown={}, device_slowdown={}",
            file.delay.t_c, file.delay.tau, file.delay.cloudlet_slowdown, file.delay.device_slowdown
        ),
        format!(
            "ad-hoc exchange delay t_s+t_r = {} ms; per-layer device processing t_p = {} ms",
            file.delay.exchange_delay(),
            file.delay.t_p
        ),
    ];
    let summary = SummaryJson {
        name: &file.name,
        kind: file.kind,
        provenance_hash: &hash,
        effective_config: &file,
        artifacts: &files,
        notes,
    };
    std::fs::write(out_dir.join("summary.json"), serde_json::to_vec_pretty(&summary)?)?;
    files.push("summary.json".into());

    Ok(RunArtifacts { out_dir: out_dir.to_path_buf(), files, provenance_hash: hash })
}

fn write_assignment_artifact(
    file: &ScenarioFile,
    cols: usize,
    rows: usize,
    out_dir: &Path,
) -> Result<()> {
    let regions: Vec<CLNRegion> = match &file.regions {
        Some(explicit) => explicit.iter().map(|r| r.to_region()).collect(),
        None => grid_regions(
            Rect::new(
                Point2::new(0.0, 0.0),
                Point2::new(file.fleet.area_width, file.fleet.area_height),
            ),
            cols,
            rows,
        ),
    };
    let snapshot = match &file.trips {
        Some(trips) => {
            let ingested = datagen::ingest_trips(
                Path::new(&trips.path),
                trips.slot_minutes,
                file.fleet.vicinity,
                trips.cell_size,
                &file.graph,
            )?;
            // Busiest slot carries the most structure.
            ingested
                .data
                .slots
                .into_iter()
                .max_by_key(|s| s.node_count())
                .ok_or_else(|| Error::EmptyInput("trip file produced no slots".into()))?
        }
        None => {
            let data = datagen::generate(&file.fleet, &file.graph, 1)?;
            data.slots.into_iter().next().expect("one slot")
        }
    };
    let uniform = uniform_assign(&snapshot, &regions)?;
    let band = 2 * file.sweep.l_values.iter().copied().max().unwrap_or(3);
    let cfg = AdaptiveConfig { band_hops: band, passes: 1 };
    let (adaptive, cost) =
        adaptive_assign(&uniform, &snapshot, &regions, &file.delay, &cfg, file.seed)?;
    let artifact = AssignmentArtifact {
        regions,
        uniform_cut: uniform.cut_size(),
        uniform: AssignmentJson::from_assignment(&uniform),
        adaptive_cut: adaptive.cut_size(),
        adaptive: AssignmentJson::from_assignment(&adaptive),
        protocol_cost_ms: cost,
    };
    std::fs::write(out_dir.join("assignment.json"), serde_json::to_vec_pretty(&artifact)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESET_NAMES {
            let text = preset(name).unwrap();
            let file = parse_scenario_str(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            let diagnostics = validate(&file);
            assert!(diagnostics.is_empty(), "{name}: {diagnostics:?}");
        }
        assert!(preset("nope").is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse_scenario_str("name = \"x\"\nbogus_key = 1\n").unwrap_err();
        assert!(matches!(err, Error::Toml(_)));
    }

    #[test]
    fn invalid_comm_range_is_diagnosed_by_field() {
        let mut file = ScenarioFile::default();
        file.sweep.comm_range = -5.0;
        let diagnostics = validate(&file);
        assert_eq!(diagnostics.len(), 1);
        assert_eq!(diagnostics[0].field, "sweep.comm_range");
    }

    #[test]
    fn overlapping_regions_are_diagnosed() {
        let mut file = ScenarioFile::default();
        file.fleet.area_width = 100.0;
        file.fleet.area_height = 100.0;
        file.regions = Some(vec![
            RegionSpec { id: 0, min_x: 0.0, min_y: 0.0, max_x: 60.0, max_y: 100.0 },
            RegionSpec { id: 1, min_x: 40.0, min_y: 0.0, max_x: 100.0, max_y: 100.0 },
        ]);
        let diagnostics = validate(&file);
        assert!(diagnostics.iter().any(|d| d.field == "regions" && d.message.contains("overlap")));
    }

    #[test]
    fn gap_in_region_tiling_is_diagnosed() {
        let mut file = ScenarioFile::default();
        file.fleet.area_width = 100.0;
        file.fleet.area_height = 100.0;
        file.regions = Some(vec![RegionSpec {
            id: 0,
            min_x: 0.0,
            min_y: 0.0,
            max_x: 50.0,
            max_y: 100.0,
        }]);
        let diagnostics = validate(&file);
        assert!(diagnostics.iter().any(|d| d.field == "regions" && d.message.contains("cover")));
    }

    #[test]
    fn valid_default_has_no_diagnostics() {
        let file = ScenarioFile {
            model: ModelConfig {
                input_dim: 18,
                output_dim: 18,
                ..ModelConfig::default()
            },
            ..ScenarioFile::default()
        };
        assert!(validate(&file).is_empty());
    }
}
