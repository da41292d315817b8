//! Scenario configuration: a flat `key = value` text format whose keys match
//! the [`ScenarioConfig`] fields one for one.
//!
//! `#` starts a comment; blank lines are ignored. Booleans take
//! `true`/`false`, everything else is numeric. Unknown and duplicate keys are
//! errors carrying the offending line number.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value '{value}' for key '{key}': {expected}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Complete description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Simulated duration, s.
    pub duration: f64,
    /// Integration time step, s.
    pub dt: f64,
    /// Total number of vehicles to generate.
    pub n_vehicles: usize,
    /// Of those, how many are pre-placed along the first half of the
    /// corridor at t = 0 (warm start); the rest arrive at the entry point.
    pub initial_vehicles: usize,
    /// Mean of the exponential arrival headway distribution, s.
    pub mean_entry_headway: f64,
    /// Entry safety gate: a vehicle spawns only once its time headway to the
    /// vehicle ahead is at least this, s.
    pub min_spawn_headway: f64,
    /// Speed at which vehicles enter the corridor, m/s.
    pub entry_speed: f64,
    /// Corridor length, m.
    pub corridor_length: f64,
    /// Position of the off-ramp split, m.
    pub offramp_position: f64,
    /// Off-ramp speed limit, m/s.
    pub offramp_speed_limit: f64,
    /// Distance before the split where exiting vehicles start adapting to the
    /// ramp limit, m.
    pub offramp_approach: f64,
    /// Fraction of vehicles routed onto the off-ramp.
    pub offramp_fraction: f64,
    /// Enables beaconing and communication-actuated acceleration.
    pub comm_enabled: bool,
    /// Beacon transmission range, m.
    pub comm_range: f64,
    /// Beacon period, s; defaults to one simulation step.
    pub beacon_period: f64,
    /// Seed for the arrival process and routing decisions.
    pub rng_seed: u64,
    /// Desired speed of ordinary vehicles, m/s.
    pub desired_speed: f64,
    /// Desired speed of the first vehicle; a lower value creates a slow
    /// platoon leader.
    pub lead_desired_speed: f64,
    /// IDM maximum acceleration, m/s^2.
    pub max_accel: f64,
    /// IDM comfortable deceleration, m/s^2.
    pub comfortable_decel: f64,
    /// Safety time gap targeted by communication-actuated followers, s. Also
    /// the headway threshold below which a follower declares a leader.
    pub ivc_time_gap: f64,
    /// Headway above which an engaged follower releases its leader and
    /// returns to baseline behaviour, s. Must be at least `ivc_time_gap`;
    /// the band keeps actuation from chattering around the threshold.
    pub ivc_release_headway: f64,
    /// Time gap of the baseline car-following behaviour, s.
    pub baseline_time_gap: f64,
    /// IDM jam distance, m.
    pub jam_distance: f64,
    /// IDM acceleration exponent.
    pub accel_exponent: f64,
    /// Vehicle length, m (front bumper to rear bumper).
    pub vehicle_length: f64,
    /// Radio transmission power, mW. Scenario metadata only; propagation is
    /// modeled as a fixed range.
    pub tx_power_mw: f64,
    /// Receiver minimum power level, dBm. Scenario metadata only.
    pub min_power_dbm: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            duration: 100.0,
            dt: 0.05,
            n_vehicles: 110,
            initial_vehicles: 40,
            mean_entry_headway: 0.8,
            min_spawn_headway: 0.5,
            entry_speed: 25.0,
            corridor_length: 3000.0,
            offramp_position: 2000.0,
            offramp_speed_limit: 18.0,
            offramp_approach: 250.0,
            offramp_fraction: 0.1,
            comm_enabled: false,
            comm_range: 500.0,
            beacon_period: 0.05,
            rng_seed: 1,
            desired_speed: 31.0,
            lead_desired_speed: 31.0,
            max_accel: 1.4,
            comfortable_decel: 2.0,
            ivc_time_gap: 4.0,
            ivc_release_headway: 5.0,
            baseline_time_gap: 1.0,
            jam_distance: 2.0,
            accel_exponent: 4.0,
            vehicle_length: 5.0,
            tx_power_mw: 15.0,
            min_power_dbm: -90.0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(x: f64) -> bool {
            x.is_finite() && x > 0.0
        }
        let mut problems = Vec::new();
        if !positive(self.dt) {
            problems.push("dt must be > 0");
        }
        if !positive(self.duration) {
            problems.push("duration must be > 0");
        }
        if !positive(self.comm_range) {
            problems.push("comm_range must be > 0");
        }
        if !positive(self.beacon_period) {
            problems.push("beacon_period must be > 0");
        }
        if !positive(self.mean_entry_headway) {
            problems.push("mean_entry_headway must be > 0");
        }
        if !(self.entry_speed.is_finite() && self.entry_speed >= 0.0) {
            problems.push("entry_speed must be >= 0");
        }
        if !positive(self.corridor_length) {
            problems.push("corridor_length must be > 0");
        }
        if !(0.0..=1.0).contains(&self.offramp_fraction) {
            problems.push("offramp_fraction must lie in [0, 1]");
        }
        if !(positive(self.offramp_position) && self.offramp_position < self.corridor_length) {
            problems.push("offramp_position must lie inside the corridor");
        }
        if !(positive(self.desired_speed) && positive(self.lead_desired_speed)) {
            problems.push("desired speeds must be > 0");
        }
        if !positive(self.vehicle_length) {
            problems.push("vehicle_length must be > 0");
        }
        if self.initial_vehicles > self.n_vehicles {
            problems.push("initial_vehicles cannot exceed n_vehicles");
        }
        if self.initial_vehicles > 0
            && self.corridor_length / 2.0 / self.initial_vehicles as f64
                <= self.vehicle_length + self.jam_distance
        {
            problems.push("initial_vehicles do not fit in half the corridor");
        }
        if self.ivc_release_headway < self.ivc_time_gap {
            problems.push("ivc_release_headway must be at least ivc_time_gap");
        }
        if !(positive(self.max_accel)
            && positive(self.comfortable_decel)
            && positive(self.ivc_time_gap)
            && positive(self.baseline_time_gap)
            && self.jam_distance.is_finite()
            && self.jam_distance >= 0.0)
        {
            problems.push("IDM parameters must be positive");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems.join("; ")))
        }
    }
}

macro_rules! assign_keys {
    ($cfg:ident, $key:expr, $value:expr, $line:expr, { $($name:ident : $kind:ident),* $(,)? }) => {
        match $key {
            $(stringify!($name) => {
                $cfg.$name = parse_value!($kind, $key, $value, $line)?;
            })*
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: $line,
                    key: $key.to_string(),
                })
            }
        }
    };
}

macro_rules! parse_value {
    (f64, $key:expr, $value:expr, $line:expr) => {
        $value.parse::<f64>().map_err(|_| ConfigError::BadValue {
            line: $line,
            key: $key.to_string(),
            value: $value.to_string(),
            expected: "a number",
        })
    };
    (usize, $key:expr, $value:expr, $line:expr) => {
        $value.parse::<usize>().map_err(|_| ConfigError::BadValue {
            line: $line,
            key: $key.to_string(),
            value: $value.to_string(),
            expected: "a non-negative integer",
        })
    };
    (u64, $key:expr, $value:expr, $line:expr) => {
        $value.parse::<u64>().map_err(|_| ConfigError::BadValue {
            line: $line,
            key: $key.to_string(),
            value: $value.to_string(),
            expected: "a non-negative integer",
        })
    };
    (bool, $key:expr, $value:expr, $line:expr) => {
        match $value {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(ConfigError::BadValue {
                line: $line,
                key: $key.to_string(),
                value: $value.to_string(),
                expected: "'true' or 'false'",
            }),
        }
    };
}

/// Parses the flat key-value scenario format. Keys not present keep their
/// defaults; the parsed configuration is validated before being returned.
pub fn parse_scenario_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut cfg = ScenarioConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = match content.split_once('=') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => {
                return Err(ConfigError::Malformed {
                    line,
                    text: content.to_string(),
                });
            }
        };
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: content.to_string(),
            });
        }
        if seen.iter().any(|k| k == key) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        seen.push(key.to_string());
        assign_keys!(cfg, key, value, line, {
            duration: f64,
            dt: f64,
            n_vehicles: usize,
            initial_vehicles: usize,
            mean_entry_headway: f64,
            min_spawn_headway: f64,
            entry_speed: f64,
            corridor_length: f64,
            offramp_position: f64,
            offramp_speed_limit: f64,
            offramp_approach: f64,
            offramp_fraction: f64,
            comm_enabled: bool,
            comm_range: f64,
            beacon_period: f64,
            rng_seed: u64,
            desired_speed: f64,
            lead_desired_speed: f64,
            max_accel: f64,
            comfortable_decel: f64,
            ivc_time_gap: f64,
            ivc_release_headway: f64,
            baseline_time_gap: f64,
            jam_distance: f64,
            accel_exponent: f64,
            vehicle_length: f64,
            tx_power_mw: f64,
            min_power_dbm: f64,
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_yields_defaults() {
        let cfg = parse_scenario_config("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
    }

    #[test]
    fn parses_overrides_and_comments() {
        let text = "\
# dense scenario
duration = 50
n_vehicles = 30   # fewer vehicles
initial_vehicles = 0
comm_enabled = true
rng_seed = 42
mean_entry_headway = 1.5
";
        let cfg = parse_scenario_config(text).unwrap();
        assert_eq!(cfg.duration, 50.0);
        assert_eq!(cfg.n_vehicles, 30);
        assert!(cfg.comm_enabled);
        assert_eq!(cfg.rng_seed, 42);
        assert_eq!(cfg.mean_entry_headway, 1.5);
        assert_eq!(cfg.dt, 0.05);
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_scenario_config("duration = 10\nwarp_factor = 9\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 2,
                key: "warp_factor".to_string()
            }
        );
    }

    #[test]
    fn malformed_line_reports_line() {
        let err = parse_scenario_config("\n\njust words\n").unwrap_err();
        assert!(matches!(err, ConfigError::Malformed { line: 3, .. }));
    }

    #[test]
    fn bad_value_reports_line_and_key() {
        let err = parse_scenario_config("dt = fast\n").unwrap_err();
        assert!(matches!(err, ConfigError::BadValue { line: 1, .. }));
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = parse_scenario_config("dt = 0.05\ndt = 0.1\n").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 2, .. }));
    }

    #[test]
    fn validation_catches_bad_combinations() {
        assert!(parse_scenario_config("dt = 0\n").is_err());
        assert!(parse_scenario_config("offramp_position = 9000\n").is_err());
        assert!(parse_scenario_config("offramp_fraction = 1.5\n").is_err());
    }
}
