//! Peer-to-peer inference delay: closed-form bounds, the simulated
//! half-duplex schedule they bracket, growth with hop count, and the
//! closed-form scaling models.
//!
//! ```bash
//! cargo run --release --example delay_bounds
//! ```

use fleetgnn::compgraph::{adjacency_lists, extract_with_adjacency};
use fleetgnn::datagen::{generate, FleetGenConfig};
use fleetgnn::engine::radio_topology;
use fleetgnn::hin::GraphConfig;
use fleetgnn::netdelay::{
    analytic_costs, decentralized_delay, inference_delay_bounds, quadratic_fit,
    simulate_decentralized, CostModelInputs, DelayModel,
};

fn main() {
    let fleet = FleetGenConfig {
        taxis: 255,
        area_width: 1400.0,
        area_height: 1400.0,
        seed: 42,
        ..FleetGenConfig::default()
    };
    let graph = GraphConfig::default();
    let data = generate(&fleet, &graph, 1).expect("fleet");
    let snapshot = &data.slots[0];
    let topology = radio_topology(snapshot, 100.0);
    let adj = adjacency_lists(&topology);
    let model = DelayModel::default();

    // Bounds and makespans averaged over every node, per hop count.
    println!("{:>3} {:>12} {:>12} {:>12}", "L", "lower", "simulated", "upper");
    let mut means = Vec::new();
    for l in 1..=5 {
        let mut lo = 0.0;
        let mut mid = 0.0;
        let mut hi = 0.0;
        for root in 0..snapshot.node_count() {
            let cg = extract_with_adjacency(&adj, root, l).unwrap();
            let b = inference_delay_bounds(&cg, &model);
            let actual = decentralized_delay(&cg, &model);
            assert!(b.lower <= actual + 1e-9 && actual <= b.upper + 1e-9);
            lo += b.lower;
            mid += actual;
            hi += b.upper;
        }
        let n = snapshot.node_count() as f64;
        println!("{l:>3} {:>12.1} {:>12.1} {:>12.1}", lo / n, mid / n, hi / n);
        means.push(mid / n);
    }
    let xs: Vec<f64> = (1..=5).map(|l| l as f64).collect();
    let fit = quadratic_fit(&xs, &means).unwrap();
    println!(
        "growth with L: {:.1} + {:.1} L + {:.1} L^2 (R^2 = {:.4})",
        fit.a, fit.b, fit.c, fit.r_squared
    );

    // A single schedule in detail.
    let cg = extract_with_adjacency(&adj, 0, 2).unwrap();
    let (makespan, trace) = simulate_decentralized(&cg, &model);
    println!(
        "\nroot 0, L=2: {} link events, makespan {:.1} ms",
        trace.events.len(),
        makespan
    );
    for event in trace.events.iter().take(6) {
        println!(
            "  t={:>8.2}  {} -> {}  (hop {})",
            event.time, event.src, event.dst, event.hop
        );
    }
    if trace.events.len() > 6 {
        println!("  ... {} more", trace.events.len() - 6);
    }

    // Closed-form scaling of region-level vs per-cloudlet inference.
    let costs = analytic_costs(&CostModelInputs {
        taxis: 255,
        regions: 10,
        history_p: 8,
        horizon_q: 4,
        grid_m: 3,
        grid_n: 3,
        layers: 3,
        boundary_fraction: 0.2,
        model: model.clone(),
    })
    .unwrap();
    println!(
        "\nscaling models: region-level {:.0} ms, per-cloudlet {:.0} ms",
        costs.region_level, costs.per_cloudlet
    );
}
