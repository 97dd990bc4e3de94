//! Build a heterogeneous taxi graph, evolve it one slot, and round-trip it
//! through the JSON export format.
//!
//! ```bash
//! cargo run --example build_taxi_graph
//! ```

use std::collections::BTreeMap;

use fleetgnn::hin::{
    build_snapshot, evolve, GraphConfig, Point2, SnapshotJson, TaxiNode,
};

fn taxi(id: u64, x: f64, y: f64, dest_x: f64, dest_y: f64) -> TaxiNode {
    TaxiNode::new(id, Point2::new(x, y), Point2::new(dest_x, dest_y))
}

fn main() {
    // Five taxis in a 400 m block; two pairs heading to the same corner.
    let nodes = vec![
        taxi(0, 50.0, 60.0, 380.0, 390.0),
        taxi(1, 120.0, 80.0, 370.0, 400.0),
        taxi(2, 300.0, 310.0, 30.0, 40.0),
        taxi(3, 340.0, 290.0, 45.0, 25.0),
        taxi(4, 200.0, 200.0, 200.0, 200.0),
    ];
    let config = GraphConfig {
        proximity_threshold: 150.0,
        destination_threshold: 80.0,
        ..GraphConfig::default()
    };
    let snapshot = build_snapshot(nodes, &config, 0).expect("valid nodes");

    println!("slot {}: {} taxis", snapshot.time_slot, snapshot.node_count());
    println!("proximity matrix (nonzero = within {} m):", config.proximity_threshold);
    for i in 0..snapshot.node_count() {
        let row: Vec<String> = (0..snapshot.node_count())
            .map(|j| format!("{:.2}", snapshot.adj_proximity[[i, j]]))
            .collect();
        println!("  [{}]", row.join(", "));
    }
    println!(
        "destination-similarity edges: {}",
        (0..5)
            .flat_map(|i| (i + 1..5).map(move |j| (i, j)))
            .filter(|&(i, j)| snapshot.adj_destination[[i, j]] != 0.0)
            .map(|(i, j)| format!("{i}-{j}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("union topology edges: {}", snapshot.union_edge_count());

    // One slot later: taxi 4 moves, taxi 5 arrives, taxi 2 departs.
    let mut moves = BTreeMap::new();
    moves.insert(4, Point2::new(60.0, 70.0));
    let next = evolve(
        &snapshot,
        vec![taxi(5, 90.0, 90.0, 10.0, 10.0)],
        &[2],
        &moves,
        &config,
    )
    .expect("evolution");
    println!(
        "slot {}: {} taxis, {} union edges after arrival/departure/move",
        next.time_slot,
        next.node_count(),
        next.union_edge_count()
    );

    // Export and re-import.
    let json = serde_json::to_string_pretty(&SnapshotJson::from_snapshot(&next)).unwrap();
    let restored = serde_json::from_str::<SnapshotJson>(&json)
        .unwrap()
        .into_snapshot()
        .unwrap();
    assert_eq!(restored.adj_proximity, next.adj_proximity);
    println!("JSON round-trip: {} bytes, adjacency preserved exactly", json.len());
}
