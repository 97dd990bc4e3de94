//! One forecasting round in all three regimes on the same fleet, with the
//! latency accounting and the agreement guarantees each regime carries.
//!
//! ```bash
//! cargo run --release --example three_settings
//! ```

use fleetgnn::datagen::{generate, FleetGenConfig};
use fleetgnn::engine::{
    run_centralized, run_decentralized, run_semidecentralized, AssignmentPolicy, EngineInputs,
    ExchangeScope,
};
use fleetgnn::hin::{GraphConfig, Point2};
use fleetgnn::model::{init_weights, ModelConfig};
use fleetgnn::netdelay::DelayModel;
use fleetgnn::partition::{grid_regions, Rect};

fn main() {
    let fleet = FleetGenConfig {
        taxis: 60,
        area_width: 800.0,
        area_height: 800.0,
        seed: 9,
        base_demand_rate: 0.3,
        ..FleetGenConfig::default()
    };
    let graph = GraphConfig {
        proximity_threshold: 160.0,
        destination_threshold: 160.0,
        ..GraphConfig::default()
    };
    let config = ModelConfig {
        gnn_layers: 3,
        lstm_layers: 4,
        input_dim: fleet.vicinity.feature_width(),
        output_dim: fleet.vicinity.feature_width(),
        hidden_dim: 16,
        horizon: 2,
        weight_seed: 1,
        ..ModelConfig::default()
    };
    let data = generate(&fleet, &graph, 4).expect("fleet");
    let weights = init_weights(&config).expect("weights");
    let delay = DelayModel::default();
    let inputs = EngineInputs {
        window: data.window(4),
        model_config: &config,
        weights: &weights,
        delay: &delay,
    };

    let central = run_centralized(&inputs).expect("centralized");
    println!("centralized:       {:>9.1} ms total", central.latency_total);
    for (name, value) in &central.latency_components {
        println!("                   {value:>9.1} ms {name}");
    }

    let p2p = run_decentralized(&inputs, 160.0).expect("decentralized");
    println!(
        "decentralized:     {:>9.1} ms (slowest taxi); {} of {} taxis truncated by radio range",
        p2p.latency_total,
        p2p.truncated_nodes.len(),
        fleet.taxis
    );

    let regions = grid_regions(
        Rect::new(Point2::new(0.0, 0.0), Point2::new(800.0, 800.0)),
        2,
        2,
    );
    let cloudlet = run_semidecentralized(
        &inputs,
        &regions,
        AssignmentPolicy::Adaptive,
        ExchangeScope::Adjacent,
        9,
        true,
    )
    .expect("cloudlets");
    println!(
        "cloudlets (2x2):   {:>9.1} ms; boundary fraction {:.2}; {} inter-cell messages per layer; {} taxis with dropped far dependencies",
        cloudlet.latency_total,
        cloudlet.boundary_fraction.unwrap(),
        cloudlet.inter_cln_messages_per_layer.unwrap(),
        cloudlet.dropped_dependency_nodes
    );
    for c in cloudlet.per_cln.as_deref().unwrap() {
        println!(
            "                   cell {}: {} taxis, {:>8.1} ms (exchange {:>6.1})",
            c.cln, c.nodes, c.total, c.inter_cln_exchange
        );
    }

    // With full pairwise exchange the cloudlet output equals the reference
    // bit for bit.
    let oracle = run_semidecentralized(
        &inputs,
        &regions,
        AssignmentPolicy::Uniform,
        ExchangeScope::AllPairs,
        9,
        false,
    )
    .expect("oracle");
    assert_eq!(oracle.predictions, central.predictions);
    println!("\nall-pairs exchange reproduces the centralized forecast exactly");
}
