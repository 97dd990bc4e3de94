//! The distributed boundary-repartition protocol on the checked-in
//! two-cell fixture: coverage assignment cuts three edges, the adaptive
//! assignment keeps one.
//!
//! ```bash
//! cargo run --example adaptive_partition
//! ```

use fleetgnn::netdelay::DelayModel;
use fleetgnn::partition::{
    adaptive_assign, extract_boundary_subgraph, kmeans_bipartition, uniform_assign,
    AdaptiveConfig, RegionedSnapshotJson,
};

fn main() {
    let (snapshot, regions) =
        RegionedSnapshotJson::parse(include_str!("../fixtures/boundary_demo.json"))
            .expect("fixture parses");
    println!(
        "{} taxis across {} cells, {} union edges",
        snapshot.node_count(),
        regions.len(),
        snapshot.union_edge_count()
    );

    let uniform = uniform_assign(&snapshot, &regions).expect("assignment");
    println!("\ncoverage-based assignment:");
    for edge in &uniform.inter_cln_edges {
        println!("  cut edge ({}, {}) across cells {} | {}", edge.a, edge.b, edge.cln_a, edge.cln_b);
    }
    println!(
        "  {} cut edges, boundary fraction {:.2}",
        uniform.cut_size(),
        uniform.boundary_fraction()
    );

    // Peek at the shared band the two cloudlets exchange.
    let band = extract_boundary_subgraph(&uniform, &snapshot, &regions, (1, 2), 6).unwrap();
    println!("\nshared boundary band: nodes {:?}", band.nodes);
    let split = kmeans_bipartition(&band, 2024).unwrap();
    println!(
        "  2-means split after {} iterations: {:?} | {:?} ({} band-internal cut edges)",
        split.iterations, split.v1, split.v2, split.cut_edges
    );

    let (adapted, cost) = adaptive_assign(
        &uniform,
        &snapshot,
        &regions,
        &DelayModel::default(),
        &AdaptiveConfig::default(),
        2024,
    )
    .expect("protocol");
    println!("\nadaptive assignment (protocol cost {cost:.2} ms):");
    for edge in &adapted.inter_cln_edges {
        println!("  cut edge ({}, {}) survives", edge.a, edge.b);
    }
    for id in [7, 8, 9] {
        println!("  node {id} now served by cell {}", adapted.node_to_cln[&id]);
    }
    println!("  {} -> {} cut edges", uniform.cut_size(), adapted.cut_size());
}
