//! Ingest NYC-style trip records into time-slotted taxi graphs with
//! demand/supply vicinity features.
//!
//! Uses the bundled 12-row sample unless a CSV path is given:
//!
//! ```bash
//! cargo run --example ingest_trips [trips.csv]
//! ```
//!
//! The expected columns are pickup_datetime, dropoff_datetime,
//! pickup_longitude, pickup_latitude, dropoff_longitude, dropoff_latitude,
//! trip_distance.

use std::path::PathBuf;

use fleetgnn::datagen::{ingest_trips, VicinityDims};
use fleetgnn::hin::GraphConfig;

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/trips_sample.csv")
    });
    let graph = GraphConfig {
        proximity_threshold: 400.0,
        destination_threshold: 500.0,
        ..GraphConfig::default()
    };
    let out = ingest_trips(&path, 15, VicinityDims::default(), 250.0, &graph).expect("ingestion");

    let d = &out.diagnostics;
    println!(
        "{}: {} rows, {} valid, {} skipped; {} pickups binned into {} slots",
        path.display(),
        d.rows_total,
        d.rows_valid,
        d.rows_skipped,
        d.pickups_binned,
        d.slots
    );

    let binned: f64 = out.demand_by_slot.iter().map(|g| g.values().sum::<f64>()).sum();
    assert_eq!(binned as usize, d.pickups_binned, "every valid pickup lands in one cell");

    for (i, snap) in out.data.slots.iter().enumerate() {
        let demand = out.demand_by_slot[i].values().sum::<f64>() as usize;
        println!(
            "slot {i}: {} active taxis, {} union edges, {} pickups",
            snap.node_count(),
            snap.union_edge_count(),
            demand
        );
    }

    if let Some(snap) = out.data.slots.first() {
        if snap.node_count() > 0 {
            let node = &snap.nodes[0];
            println!(
                "\ntaxi {} at ({:.0}, {:.0}) heading to ({:.0}, {:.0}); vicinity features: {:?}",
                node.id,
                node.position.x,
                node.position.y,
                node.destination.x,
                node.destination.y,
                node.features
            );
        }
    }
}
