//! IDM micro-simulation of a single-lane corridor with an off-ramp and
//! simulated vehicle-to-vehicle beaconing.

pub mod config;
pub mod idm;
pub mod world;

pub use config::{parse_scenario_config, ConfigError, ScenarioConfig};
pub use idm::{desired_gap, free_flow_acceleration, idm_acceleration, IdmError, IdmParams};
pub use world::{
    run_scenario, Route, ScenarioOutcome, ScenarioSummary, SimError, VehicleState,
    VehicleTrajectory, WorldState, HEADWAY_CAP,
};
