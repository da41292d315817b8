//! Simulates the same dense corridor with and without beaconing and monitors
//! every trajectory against the headway specification.
//!
//! ```sh
//! cargo run --example headway_demo
//! ```

use traffic_stl::sim::{run_scenario, ScenarioConfig};
use traffic_stl::specs::{
    build_headway_spec, evaluate_population, HeadwaySpecParams, PopulationOptions,
};
use traffic_stl::trace::channel;

fn scenario(comm_enabled: bool) -> ScenarioConfig {
    ScenarioConfig {
        duration: 100.0,
        n_vehicles: 16,
        initial_vehicles: 0,
        mean_entry_headway: 3.0,
        min_spawn_headway: 4.5,
        entry_speed: 18.0,
        corridor_length: 4000.0,
        offramp_position: 2500.0,
        offramp_fraction: 0.2,
        lead_desired_speed: 14.0, // slow platoon leader
        comm_enabled,
        rng_seed: 11,
        ..ScenarioConfig::default()
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = build_headway_spec(&HeadwaySpecParams::default())?;
    println!("specification: {spec}\n");

    for (label, comm) in [("baseline", false), ("with beaconing", true)] {
        let outcome = run_scenario(&scenario(comm))?;
        let traces = outcome.traces()?;
        let options = PopulationOptions::new("headway", channel::HEADWAY);
        let evaluation = evaluate_population(&traces, &spec, &options)?;
        let report = &evaluation.report;
        println!(
            "{label:>15}: {} conforming / {} violating, mean headway of conforming group: {}",
            report.conforming.volume,
            report.violating.volume,
            report
                .conforming
                .mean
                .map(|m| format!("{m:.2} s"))
                .unwrap_or_else(|| "n/a".to_string()),
        );
        for verdict in evaluation.verdicts.iter().take(3) {
            println!(
                "    {}: summary robustness {:+.3}, horizon [{:.2}, {:.2}]",
                verdict.vehicle_id, verdict.summary, verdict.horizon.0, verdict.horizon.1
            );
        }
    }
    Ok(())
}
