//! Taxi-fleet demand/supply forecasting with graph neural networks under
//! three execution regimes: a central server, fully peer-to-peer taxis, and
//! cloudlets attached to base stations that each serve a city cell.
//!
//! The crate is organized around the lifecycle of one forecasting round:
//!
//! - [`hin`] builds the per-slot heterogeneous taxi graph (connectivity,
//!   proximity, destination-similarity relations).
//! - [`compgraph`] extracts the multi-hop neighborhood a node needs for an
//!   L-layer GNN, with the per-hop degree statistics the delay bounds use.
//! - [`netdelay`] prices inference latency: analytic bounds for peer-to-peer
//!   message passing, a feasible half-duplex schedule simulator, and the
//!   accounting models for server and cloudlet execution.
//! - [`partition`] assigns taxis to cloudlets, either by coverage area or by
//!   the distributed boundary-repartition protocol that trims inter-cloudlet
//!   edges.
//! - [`model`] is the deterministic hetGNN-LSTM forward pass.
//! - [`engine`] orchestrates the three regimes end to end and proves they
//!   agree where they should.
//! - [`datagen`] makes synthetic fleets and ingests NYC-style trip records.
//! - [`scenario`] runs declarative experiment files and writes the report
//!   artifacts; the `fleetgnn` binary is a thin wrapper over it.
//!
//! See the crate examples for one runnable program per capability.

pub mod compgraph;
pub mod datagen;
pub mod engine;
pub mod hin;
pub mod model;
pub mod netdelay;
pub mod partition;
pub mod scenario;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate node id {0}")]
    DuplicateNodeId(u64),
    #[error("node {0} has a non-finite coordinate")]
    NonFiniteCoordinate(u64),
    #[error("unknown node id {0}")]
    UnknownNodeId(u64),
    #[error("root index {0} out of range for {1} nodes")]
    RootOutOfRange(usize, usize),
    #[error("hop index {hop} out of range 1..={hops}")]
    HopOutOfRange { hop: usize, hops: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("node {0} lies outside every cloudlet region")]
    NodeOutsideRegions(u64),
    #[error("regions {0} and {1} are not adjacent")]
    RegionsNotAdjacent(u32, u32),
    #[error("unknown region id {0}")]
    UnknownRegion(u32),
    #[error("assignment does not cover the snapshot node set: {0}")]
    AssignmentMismatch(String),
    #[error("snapshots in a window must share one node set: {0}")]
    InconsistentWindow(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("scenario validation failed with {} diagnostic(s)", .0.len())]
    Validation(Vec<crate::scenario::Diagnostic>),
    #[error("trip file rejected: {0}")]
    TripIngest(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("TOML parse error: {0}")]
    Toml(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
