//! Extract a node's multi-hop computational graph and the per-hop degree
//! statistics that drive the delay bounds.
//!
//! ```bash
//! cargo run --example computational_graphs
//! ```

use fleetgnn::compgraph::{extract, hop_degree_stats};
use ndarray::Array2;

fn main() {
    // Two-level tree: root 0 with relays 1 and 2; 1 serves three leaves,
    // 2 serves four.
    let edges = [
        (0, 1),
        (0, 2),
        (1, 3),
        (1, 4),
        (1, 5),
        (2, 6),
        (2, 7),
        (2, 8),
        (2, 9),
    ];
    let mut topology = Array2::<u8>::zeros((10, 10));
    for (i, j) in edges {
        topology[[i, j]] = 1;
        topology[[j, i]] = 1;
    }

    let cg = extract(&topology, 0, 2).expect("root exists");
    println!("root 0: degree {}", cg.root_degree);
    for l in 1..=cg.hops {
        let (max_d, sum_d) = hop_degree_stats(&cg, l).unwrap();
        println!(
            "hop {l}: {} nodes {:?}, max degree {max_d}, degree sum {sum_d}",
            cg.hop_sets[l - 1].len(),
            cg.hop_sets[l - 1]
        );
    }
    println!("induced edges: {:?}", cg.edges);

    // The same machinery on an arbitrary root of the same graph.
    let cg = extract(&topology, 3, 3).unwrap();
    println!(
        "root 3 shells: {:?} (leaf nodes reach the far side in 3 hops)",
        cg.hop_sets
    );
}
