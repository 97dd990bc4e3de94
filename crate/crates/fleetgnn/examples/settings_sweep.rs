//! Full settings comparison: centralized vs peer-to-peer vs cloudlet
//! execution over a layer sweep, printed as a per-setting mean-delay table.
//!
//! Runs the shipped `fig6` preset, or any scenario file passed as the first
//! argument:
//!
//! ```bash
//! cargo run --release --example settings_sweep [scenario.toml]
//! ```

use std::collections::BTreeMap;

use fleetgnn::scenario::{parse_scenario, parse_scenario_str, preset};
use fleetgnn::engine::{compare_settings, SweepSpec};

fn main() {
    let file = match std::env::args().nth(1) {
        Some(path) => parse_scenario(std::path::Path::new(&path)).expect("scenario parses"),
        None => parse_scenario_str(preset("fig6").unwrap()).expect("preset parses"),
    };
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
    let report = compare_settings(&spec).expect("sweep");

    // Mean delay per (setting, L) over trials.
    let mut sums: BTreeMap<(String, usize), (f64, usize)> = BTreeMap::new();
    for row in &report.delays {
        let entry = sums.entry((row.setting.clone(), row.l)).or_insert((0.0, 0));
        entry.0 += row.total_ms;
        entry.1 += 1;
    }
    let settings: Vec<String> = {
        let mut s: Vec<String> = sums.keys().map(|(name, _)| name.clone()).collect();
        s.dedup();
        s
    };
    print!("{:>22}", "setting \\ L");
    for &l in &spec.l_values {
        print!("{l:>12}");
    }
    println!();
    for name in &settings {
        print!("{name:>22}");
        for &l in &spec.l_values {
            let (total, count) = sums[&(name.clone(), l)];
            print!("{:>12.1}", total / count as f64);
        }
        println!();
    }

    // Containment check from the bounds table.
    let contained = report
        .bounds
        .iter()
        .all(|b| b.lower_ms <= b.actual_ms + 1e-9 && b.actual_ms <= b.upper_ms + 1e-9);
    println!("\nbounds rows: {} (all contained: {contained})", report.bounds.len());

    // Headline ratios.
    let get = |name: &str, l: usize| {
        let (total, count) = sums[&(name.to_string(), l)];
        total / count as f64
    };
    if settings.iter().any(|s| s == "semi_uniform_10") {
        println!(
            "at L=3: centralized / semi_uniform_10 = {:.2}, decentralized / semi_uniform_10 = {:.2}",
            get("centralized", 3) / get("semi_uniform_10", 3),
            get("decentralized", 3) / get("semi_uniform_10", 3),
        );
        let ordering = spec.l_values.iter().all(|&l| {
            get("semi_uniform_10", l) < get("decentralized", l)
                && get("decentralized", l) < get("centralized", l)
        });
        println!("semi < decentralized < centralized at every L: {ordering}");
        if settings.iter().any(|s| s == "semi_uniform_20") {
            let finer = spec
                .l_values
                .iter()
                .all(|&l| get("semi_uniform_20", l) < get("semi_uniform_10", l));
            println!("20 cells below 10 cells at every L: {finer}");
        }
        let mean = |name: &str| {
            spec.l_values.iter().map(|&l| get(name, l)).sum::<f64>() / spec.l_values.len() as f64
        };
        println!(
            "sweep-mean adaptive / uniform (10 cells): {:.3}",
            mean("semi_adaptive_10") / mean("semi_uniform_10")
        );
    }
}
