//! Single-lane corridor simulation with an off-ramp branch, IDM
//! car-following, and periodic position/speed beaconing.
//!
//! Two behaviours coexist. The baseline follows the vehicle physically ahead
//! with a short time gap. When communication is enabled, every vehicle
//! broadcasts `(id, x, v)` each beacon period; a receiver that finds its time
//! headway to the nearest sender ahead below the safety gap declares that
//! sender its leader, replies with its own state, and actuates the IDM
//! acceleration targeting the safety gap for the next steps.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::TraceRow;
use crate::sim::config::{ConfigError, ScenarioConfig};
use crate::sim::idm::{free_flow_acceleration, idm_acceleration, IdmError, IdmParams};
use crate::trace::{Trace, TraceError};

/// Headway written when the follower is (near) stationary: the time headway
/// `gap / v` diverges, and the emitted value is capped to keep trace files
/// finite.
pub const HEADWAY_CAP: f64 = 9999.999;

const STOPPED_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("empty scenario: n_vehicles is 0")]
    EmptyScenario,
    #[error("collision at t={time:.2}s: {follower} ran into {leader} (gap {gap:.3} m)")]
    Collision {
        time: f64,
        follower: String,
        leader: String,
        gap: f64,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Route assignment of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    Mainline,
    Offramp,
}

/// Effective roadway a vehicle occupies: off-ramp vehicles leave the mainline
/// at the split position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    Mainline,
    Ramp,
}

/// Last beacon received from the declared leader.
#[derive(Debug, Clone, PartialEq)]
pub struct LeaderRecord {
    pub leader_id: String,
    pub x_leader: f64,
    pub v_leader: f64,
    pub received_at: f64,
}

/// Last reply received from a declared follower.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerRecord {
    pub follower_id: String,
    pub x_follower: f64,
    pub v_follower: f64,
    pub received_at: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: String,
    /// Front-bumper position along the corridor, m.
    pub x: f64,
    /// Speed, m/s; never negative.
    pub v: f64,
    /// Communication-actuated acceleration command, applied instead of the
    /// baseline behaviour until the next beacon round.
    pub accel_cmd: Option<f64>,
    pub route: Route,
    pub desired_speed: f64,
    pub is_leader: bool,
    pub is_follower: bool,
    pub leader_record: Option<LeaderRecord>,
    pub follower_record: Option<FollowerRecord>,
    pub spawned_at: f64,
}

impl VehicleState {
    pub fn new(id: impl Into<String>, x: f64, v: f64, route: Route, desired_speed: f64) -> Self {
        VehicleState {
            id: id.into(),
            x,
            v,
            accel_cmd: None,
            route,
            desired_speed,
            is_leader: false,
            is_follower: false,
            leader_record: None,
            follower_record: None,
            spawned_at: 0.0,
        }
    }

    pub fn lane(&self, offramp_position: f64) -> Lane {
        if self.route == Route::Offramp && self.x >= offramp_position {
            Lane::Ramp
        } else {
            Lane::Mainline
        }
    }

    pub fn on_offramp(&self, offramp_position: f64) -> bool {
        self.lane(offramp_position) == Lane::Ramp
    }
}

#[derive(Debug, Clone)]
struct Arrival {
    at: f64,
    route: Route,
    desired_speed: f64,
}

/// One vehicle's recorded trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTrajectory {
    pub vehicle_id: String,
    pub rows: Vec<TraceRow>,
}

impl VehicleTrajectory {
    pub fn to_trace(&self) -> Result<Trace, TraceError> {
        crate::io::trace_from_rows(&self.vehicle_id, &self.rows)
    }
}

/// Scenario-level summary written next to the trace files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub vehicle_count: usize,
    pub collision_free: bool,
    pub rng_seed: u64,
    pub comm_enabled: bool,
    pub duration: f64,
    pub dt: f64,
}

/// Traces and summary of a completed run.
#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub trajectories: Vec<VehicleTrajectory>,
    pub summary: ScenarioSummary,
}

impl ScenarioOutcome {
    pub fn traces(&self) -> Result<Vec<Trace>, TraceError> {
        self.trajectories
            .iter()
            .map(VehicleTrajectory::to_trace)
            .collect()
    }
}

/// Complete simulation state, advanced single-threaded step by step.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub time: f64,
    /// Active vehicles sorted by position, rear to front.
    pub vehicles: Vec<VehicleState>,
    config: ScenarioConfig,
    arrivals: VecDeque<Arrival>,
    spawned: usize,
    trajectories: Vec<VehicleTrajectory>,
}

impl WorldState {
    /// Builds the initial world for a scenario: an empty corridor plus the
    /// seeded arrival schedule (exponential inter-arrival times, off-ramp
    /// routing by coin flip, the first vehicle taking the configured lead
    /// desired speed).
    pub fn new(config: ScenarioConfig) -> Result<Self, SimError> {
        if config.n_vehicles == 0 {
            return Err(SimError::EmptyScenario);
        }
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);

        // Warm start: the first initial_vehicles occupy the first half of the
        // corridor, front to back, the foremost one taking the lead desired
        // speed. The remainder arrive at the entry point.
        let mut vehicles = Vec::with_capacity(config.initial_vehicles);
        let mut trajectories = Vec::with_capacity(config.initial_vehicles);
        let spacing = if config.initial_vehicles > 0 {
            config.corridor_length / 2.0 / config.initial_vehicles as f64
        } else {
            0.0
        };
        for i in 0..config.initial_vehicles {
            let id = format!("veh_{:03}", i);
            let x = config.corridor_length / 2.0 - spacing * i as f64;
            let route = if rng.random::<f64>() < config.offramp_fraction {
                Route::Offramp
            } else {
                Route::Mainline
            };
            let desired_speed = if i == 0 {
                config.lead_desired_speed
            } else {
                config.desired_speed
            };
            vehicles.push(VehicleState::new(
                id.clone(),
                x,
                config.entry_speed,
                route,
                desired_speed,
            ));
            trajectories.push(VehicleTrajectory {
                vehicle_id: id,
                rows: Vec::new(),
            });
        }
        vehicles.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());

        let n_arrivals = config.n_vehicles - config.initial_vehicles;
        let mut arrivals = VecDeque::with_capacity(n_arrivals);
        let mut at = 0.0;
        for i in 0..n_arrivals {
            if i > 0 {
                let u: f64 = rng.random();
                at += -config.mean_entry_headway * (1.0 - u).ln();
            }
            let route = if rng.random::<f64>() < config.offramp_fraction {
                Route::Offramp
            } else {
                Route::Mainline
            };
            let desired_speed = if config.initial_vehicles == 0 && i == 0 {
                config.lead_desired_speed
            } else {
                config.desired_speed
            };
            arrivals.push_back(Arrival {
                at,
                route,
                desired_speed,
            });
        }
        let spawned = config.initial_vehicles;
        Ok(WorldState {
            time: 0.0,
            vehicles,
            config,
            arrivals,
            spawned,
            trajectories,
        })
    }

    /// Builds a world with explicit vehicles and no arrival schedule. Useful
    /// for focused dynamics experiments.
    pub fn with_vehicles(
        config: ScenarioConfig,
        mut vehicles: Vec<VehicleState>,
    ) -> Result<Self, SimError> {
        config.validate()?;
        vehicles.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        let trajectories = vehicles
            .iter()
            .map(|v| VehicleTrajectory {
                vehicle_id: v.id.clone(),
                rows: Vec::new(),
            })
            .collect();
        Ok(WorldState {
            time: 0.0,
            vehicles,
            config,
            arrivals: VecDeque::new(),
            spawned: 0,
            trajectories,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    fn effective_desired_speed(&self, vehicle: &VehicleState) -> f64 {
        if vehicle.route == Route::Offramp
            && vehicle.x >= self.config.offramp_position - self.config.offramp_approach
        {
            vehicle.desired_speed.min(self.config.offramp_speed_limit)
        } else {
            vehicle.desired_speed
        }
    }

    fn idm_params(&self, vehicle: &VehicleState, t_gap: f64) -> IdmParams {
        IdmParams {
            a_max: self.config.max_accel,
            b_comf: self.config.comfortable_decel,
            t_gap,
            s0: self.config.jam_distance,
            v0: self.effective_desired_speed(vehicle),
            delta: self.config.accel_exponent,
        }
    }

    /// Index of the nearest vehicle ahead of `idx` on the same lane.
    fn leader_index(&self, idx: usize) -> Option<usize> {
        let lane = self.vehicles[idx].lane(self.config.offramp_position);
        (idx + 1..self.vehicles.len())
            .find(|&j| self.vehicles[j].lane(self.config.offramp_position) == lane)
    }

    /// Vehicles whose beacons `idx` receives (fixed symmetric range).
    pub fn beacon_neighbors(&self, idx: usize) -> Vec<usize> {
        let x = self.vehicles[idx].x;
        (0..self.vehicles.len())
            .filter(|&j| j != idx && (self.vehicles[j].x - x).abs() <= self.config.comm_range)
            .collect()
    }

    /// One beaconing round: every vehicle broadcasts position and speed;
    /// receivers with a time headway below the safety gap to the nearest
    /// sender ahead declare it their leader, reply, and set the actuated
    /// acceleration for the coming steps.
    ///
    /// Engagement is hysteretic: declaration requires the headway to drop
    /// below the safety gap, and an already-engaged follower keeps tracking
    /// the same leader until the headway exceeds the release threshold.
    /// Without the band the follower chatters at the threshold, ceding
    /// control to the aggressive baseline the moment the gap is safe again.
    pub fn comm_round(&mut self) {
        let n = self.vehicles.len();
        for v in &mut self.vehicles {
            v.accel_cmd = None;
            v.is_leader = false;
            v.is_follower = false;
            v.follower_record = None;
        }
        for i in 0..n {
            // nearest same-lane sender ahead among received beacons
            let lane = self.vehicles[i].lane(self.config.offramp_position);
            let leader = (i + 1..n)
                .filter(|&j| self.vehicles[j].lane(self.config.offramp_position) == lane)
                .take_while(|&j| {
                    (self.vehicles[j].x - self.vehicles[i].x).abs() <= self.config.comm_range
                })
                .next();
            let Some(j) = leader else {
                self.vehicles[i].leader_record = None;
                continue;
            };
            let gap = self.vehicles[j].x - self.vehicles[i].x - self.config.vehicle_length;
            if gap <= 0.0 {
                // the ordering check after the next step reports the pair
                self.vehicles[i].leader_record = None;
                continue;
            }
            let follower = &self.vehicles[i];
            let headway = if follower.v <= STOPPED_EPS {
                f64::INFINITY
            } else {
                gap / follower.v
            };
            let tracking_same_leader = follower
                .leader_record
                .as_ref()
                .is_some_and(|r| r.leader_id == self.vehicles[j].id);
            let engage = headway < self.config.ivc_time_gap
                || (tracking_same_leader && headway < self.config.ivc_release_headway);
            if !engage {
                self.vehicles[i].leader_record = None;
                continue;
            }
            let params = self.idm_params(follower, self.config.ivc_time_gap);
            let dv = follower.v - self.vehicles[j].v;
            let accel =
                idm_acceleration(gap, follower.v, dv, &params).expect("gap checked positive above");
            let (x_l, v_l, id_l) = {
                let l = &self.vehicles[j];
                (l.x, l.v, l.id.clone())
            };
            let (x_f, v_f, id_f) = {
                let f = &self.vehicles[i];
                (f.x, f.v, f.id.clone())
            };
            let now = self.time;
            {
                let f = &mut self.vehicles[i];
                f.is_follower = true;
                f.leader_record = Some(LeaderRecord {
                    leader_id: id_l,
                    x_leader: x_l,
                    v_leader: v_l,
                    received_at: now,
                });
                f.accel_cmd = Some(accel);
            }
            {
                let l = &mut self.vehicles[j];
                l.is_leader = true;
                l.follower_record = Some(FollowerRecord {
                    follower_id: id_f,
                    x_follower: x_f,
                    v_follower: v_f,
                    received_at: now,
                });
            }
        }
    }

    /// Advances the dynamics by `dt`: communication-actuated vehicles apply
    /// their command, everyone else follows the vehicle ahead (IDM with the
    /// baseline time gap) or drives free. Speeds are clamped at zero; the
    /// per-lane strict position ordering is checked afterwards.
    pub fn step(&mut self, dt: f64) -> Result<(), SimError> {
        let n = self.vehicles.len();
        let mut accels = Vec::with_capacity(n);
        for i in 0..n {
            let vehicle = &self.vehicles[i];
            let accel = if let Some(cmd) = vehicle.accel_cmd {
                cmd
            } else {
                match self.leader_index(i) {
                    Some(j) => {
                        let leader = &self.vehicles[j];
                        let gap = leader.x - vehicle.x - self.config.vehicle_length;
                        let params = self.idm_params(vehicle, self.config.baseline_time_gap);
                        idm_acceleration(gap, vehicle.v, vehicle.v - leader.v, &params).map_err(
                            |IdmError::CollisionState { gap }| SimError::Collision {
                                time: self.time,
                                follower: vehicle.id.clone(),
                                leader: leader.id.clone(),
                                gap,
                            },
                        )?
                    }
                    None => {
                        let params = self.idm_params(vehicle, self.config.baseline_time_gap);
                        free_flow_acceleration(vehicle.v, &params)
                    }
                }
            };
            accels.push(accel);
        }
        for (vehicle, accel) in self.vehicles.iter_mut().zip(accels) {
            vehicle.v = (vehicle.v + accel * dt).max(0.0);
            vehicle.x += vehicle.v * dt;
        }
        self.time += dt;
        self.vehicles.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
        self.check_ordering()
    }

    fn check_ordering(&self) -> Result<(), SimError> {
        for lane in [Lane::Mainline, Lane::Ramp] {
            let mut prev: Option<&VehicleState> = None;
            for v in self
                .vehicles
                .iter()
                .filter(|v| v.lane(self.config.offramp_position) == lane)
            {
                if let Some(rear) = prev {
                    let gap = v.x - rear.x - self.config.vehicle_length;
                    if gap <= 0.0 {
                        return Err(SimError::Collision {
                            time: self.time,
                            follower: rear.id.clone(),
                            leader: v.id.clone(),
                            gap,
                        });
                    }
                }
                prev = Some(v);
            }
        }
        Ok(())
    }

    /// Spawns every due arrival whose entry would be safe: the gap to the
    /// vehicle ahead must exceed the jam distance and the entry time headway
    /// the configured spawn gate. Blocked arrivals wait in order.
    fn spawn_due(&mut self) {
        while let Some(front) = self.arrivals.front() {
            if front.at > self.time {
                break;
            }
            let safe = match self
                .vehicles
                .iter()
                .find(|v| v.lane(self.config.offramp_position) == Lane::Mainline && v.x >= 0.0)
            {
                Some(ahead) => {
                    let gap = ahead.x - self.config.vehicle_length;
                    let headway_ok = if self.config.entry_speed <= STOPPED_EPS {
                        true
                    } else {
                        gap / self.config.entry_speed >= self.config.min_spawn_headway
                    };
                    gap > self.config.jam_distance && headway_ok
                }
                None => true,
            };
            if !safe {
                break;
            }
            let arrival = self.arrivals.pop_front().expect("checked non-empty");
            let id = format!("veh_{:03}", self.spawned);
            let mut vehicle = VehicleState::new(
                id.clone(),
                0.0,
                self.config.entry_speed,
                arrival.route,
                arrival.desired_speed,
            );
            vehicle.spawned_at = self.time;
            self.spawned += 1;
            self.vehicles.insert(0, vehicle);
            self.trajectories.push(VehicleTrajectory {
                vehicle_id: id,
                rows: Vec::new(),
            });
        }
    }

    fn record_rows(&mut self) {
        let offramp_position = self.config.offramp_position;
        for i in 0..self.vehicles.len() {
            let leader = self.leader_index(i);
            let vehicle = &self.vehicles[i];
            let (headway, leader_id) = match leader {
                Some(j) => {
                    let gap = self.vehicles[j].x - vehicle.x - self.config.vehicle_length;
                    let h = if vehicle.v <= STOPPED_EPS {
                        HEADWAY_CAP
                    } else {
                        (gap / vehicle.v).min(HEADWAY_CAP)
                    };
                    (h, self.vehicles[j].id.clone())
                }
                None => (crate::trace::NO_LEADER_HEADWAY, String::new()),
            };
            let row = TraceRow {
                t: self.time,
                vehicle_id: vehicle.id.clone(),
                x: vehicle.x,
                speed: vehicle.v,
                headway,
                leader_id,
                on_offramp: vehicle.on_offramp(offramp_position),
            };
            let slot = self
                .trajectories
                .iter_mut()
                .rfind(|t| t.vehicle_id == row.vehicle_id)
                .expect("every active vehicle has a trajectory slot");
            slot.rows.push(row);
        }
    }

    fn remove_exited(&mut self) {
        let end = self.config.corridor_length;
        self.vehicles.retain(|v| v.x <= end);
    }
}

/// Runs a whole scenario: seeded spawning, optional beaconing, IDM dynamics,
/// and per-vehicle trajectory recording at every step. Deterministic for a
/// fixed configuration.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome, SimError> {
    let mut world = WorldState::new(config.clone())?;
    let n_steps = (config.duration / config.dt).round() as u64;
    let steps_per_beacon = (config.beacon_period / config.dt).round().max(1.0) as u64;
    for step_idx in 0..n_steps {
        world.spawn_due();
        if config.comm_enabled && step_idx % steps_per_beacon == 0 {
            world.comm_round();
        }
        world.record_rows();
        world.step(config.dt)?;
        world.remove_exited();
    }
    let summary = ScenarioSummary {
        vehicle_count: world.spawned,
        collision_free: true,
        rng_seed: config.rng_seed,
        comm_enabled: config.comm_enabled,
        duration: config.duration,
        dt: config.dt,
    };
    let trajectories = world
        .trajectories
        .into_iter()
        .filter(|t| !t.rows.is_empty())
        .collect();
    Ok(ScenarioOutcome {
        trajectories,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> ScenarioConfig {
        ScenarioConfig {
            corridor_length: 100_000.0,
            offramp_position: 99_000.0,
            offramp_fraction: 0.0,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn free_vehicle_holds_desired_speed() {
        let config = base_config();
        let vehicle = VehicleState::new("a", 0.0, 31.0, Route::Mainline, 31.0);
        let mut world = WorldState::with_vehicles(config, vec![vehicle]).unwrap();
        for _ in 0..100 {
            let before = world.vehicles[0].v;
            world.step(0.05).unwrap();
            assert!((world.vehicles[0].v - before).abs() < 1e-6);
        }
        assert!((world.vehicles[0].v - 31.0).abs() < 1e-4);
    }

    #[test]
    fn standstill_follower_at_jam_distance_stays_put() {
        let config = base_config();
        let rear = VehicleState::new("rear", 0.0, 0.0, Route::Mainline, 31.0);
        // front bumper to front bumper: vehicle length + jam distance; the
        // front vehicle is held in place (stopped obstruction)
        let mut front = VehicleState::new("front", 7.0, 0.0, Route::Mainline, 31.0);
        front.accel_cmd = Some(0.0);
        let mut world = WorldState::with_vehicles(config, vec![rear, front]).unwrap();
        for _ in 0..200 {
            world.step(0.05).unwrap();
        }
        assert_eq!(world.vehicles[0].v, 0.0);
        assert_eq!(world.vehicles[0].x, 0.0);
        assert_eq!(world.vehicles[1].x, 7.0);
    }

    #[test]
    fn follower_converges_to_desired_gap() {
        // slow leader well below the follower's desired speed so the IDM
        // equilibrium gap sits close to the desired minimum gap
        let mut config = base_config();
        config.baseline_time_gap = 4.0;
        let leader = VehicleState::new("lead", 300.0, 12.0, Route::Mainline, 12.0);
        let follower = VehicleState::new("follow", 0.0, 25.0, Route::Mainline, 31.0);
        let mut world = WorldState::with_vehicles(config.clone(), vec![leader, follower]).unwrap();
        for _ in 0..6000 {
            world.step(0.05).unwrap();
        }
        let follower = world.vehicles.iter().find(|v| v.id == "follow").unwrap();
        let leader = world.vehicles.iter().find(|v| v.id == "lead").unwrap();
        let gap = leader.x - follower.x - config.vehicle_length;
        let params = IdmParams {
            t_gap: 4.0,
            v0: 31.0,
            ..IdmParams::default()
        };
        let target = crate::sim::idm::desired_gap(follower.v, 0.0, &params);
        assert!(
            (gap - target).abs() / target < 0.05,
            "gap {gap:.2} vs desired {target:.2}"
        );
    }

    #[test]
    fn out_of_range_vehicles_exchange_nothing() {
        let mut config = base_config();
        config.comm_enabled = true;
        let a = VehicleState::new("a", 0.0, 25.0, Route::Mainline, 31.0);
        let b = VehicleState::new("b", 600.0, 25.0, Route::Mainline, 31.0);
        let mut world = WorldState::with_vehicles(config, vec![a, b]).unwrap();
        world.comm_round();
        assert!(world.beacon_neighbors(0).is_empty());
        for v in &world.vehicles {
            assert!(!v.is_leader && !v.is_follower);
            assert!(v.accel_cmd.is_none());
        }
    }

    #[test]
    fn close_follower_declares_leader_and_actuates() {
        let mut config = base_config();
        config.comm_enabled = true;
        // gap 80 m at 25 m/s: headway 3.2 s < 4 s
        let follower = VehicleState::new("f", 0.0, 25.0, Route::Mainline, 31.0);
        let leader = VehicleState::new("l", 85.0, 25.0, Route::Mainline, 31.0);
        let mut world = WorldState::with_vehicles(config, vec![follower, leader]).unwrap();
        world.comm_round();
        let f = world.vehicles.iter().find(|v| v.id == "f").unwrap();
        let l = world.vehicles.iter().find(|v| v.id == "l").unwrap();
        assert!(f.is_follower);
        assert!(f.accel_cmd.is_some());
        assert_eq!(f.leader_record.as_ref().unwrap().leader_id, "l");
        assert!(l.is_leader);
        assert_eq!(l.follower_record.as_ref().unwrap().follower_id, "f");
        // IDM braking toward the 4 s gap
        assert!(f.accel_cmd.unwrap() < 0.0);
    }

    #[test]
    fn comfortable_follower_keeps_default_behaviour() {
        let mut config = base_config();
        config.comm_enabled = true;
        // gap 120 m at 25 m/s: headway 4.8 s >= 4 s
        let follower = VehicleState::new("f", 0.0, 25.0, Route::Mainline, 31.0);
        let leader = VehicleState::new("l", 125.0, 25.0, Route::Mainline, 31.0);
        let mut world = WorldState::with_vehicles(config, vec![follower, leader]).unwrap();
        world.comm_round();
        let f = world.vehicles.iter().find(|v| v.id == "f").unwrap();
        assert!(!f.is_follower);
        assert!(f.accel_cmd.is_none());
    }

    #[test]
    fn accel_command_persists_between_beacon_rounds() {
        let mut config = base_config();
        config.comm_enabled = true;
        let follower = VehicleState::new("f", 0.0, 25.0, Route::Mainline, 31.0);
        let leader = VehicleState::new("l", 85.0, 25.0, Route::Mainline, 31.0);
        let mut world = WorldState::with_vehicles(config, vec![follower, leader]).unwrap();
        world.comm_round();
        let cmd = world.vehicles[0].accel_cmd.expect("engaged");
        // steps without an intervening beacon round keep applying the command
        for _ in 0..4 {
            world.step(0.05).unwrap();
            assert_eq!(world.vehicles[0].accel_cmd, Some(cmd));
        }
        // the next round recomputes it from the fresh state
        world.comm_round();
        let next = world.vehicles[0].accel_cmd.expect("still engaged");
        assert_ne!(next, cmd);
    }

    #[test]
    fn engaged_follower_releases_above_the_hysteresis_band() {
        let mut config = base_config();
        config.comm_enabled = true;
        // headway 3.2 s: engage
        let follower = VehicleState::new("f", 0.0, 25.0, Route::Mainline, 31.0);
        let leader = VehicleState::new("l", 85.0, 25.0, Route::Mainline, 31.0);
        let mut world = WorldState::with_vehicles(config, vec![follower, leader]).unwrap();
        world.comm_round();
        assert!(world.vehicles[0].is_follower);
        // same leader drifting ahead: at 4.5 s the engagement holds...
        world.vehicles[1].x = world.vehicles[0].x + 4.5 * 25.0 + 5.0;
        world.comm_round();
        assert!(world.vehicles[0].is_follower, "inside the release band");
        // ...but past the 5 s release threshold it lets go
        world.vehicles[1].x = world.vehicles[0].x + 5.2 * 25.0 + 5.0;
        world.comm_round();
        assert!(!world.vehicles[0].is_follower);
        assert!(world.vehicles[0].accel_cmd.is_none());
    }

    #[test]
    fn stopped_follower_never_actuates() {
        let mut config = base_config();
        config.comm_enabled = true;
        let follower = VehicleState::new("f", 0.0, 0.0, Route::Mainline, 31.0);
        let leader = VehicleState::new("l", 40.0, 10.0, Route::Mainline, 31.0);
        let mut world = WorldState::with_vehicles(config, vec![follower, leader]).unwrap();
        world.comm_round();
        assert!(world.vehicles[0].accel_cmd.is_none());
    }

    #[test]
    fn beacon_reception_is_symmetric() {
        let config = base_config();
        let vehicles: Vec<VehicleState> = (0..8)
            .map(|i| {
                VehicleState::new(
                    format!("v{i}"),
                    130.0 * i as f64,
                    20.0,
                    Route::Mainline,
                    31.0,
                )
            })
            .collect();
        let world = WorldState::with_vehicles(config, vehicles).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i == j {
                    continue;
                }
                let i_hears_j = world.beacon_neighbors(i).contains(&j);
                let j_hears_i = world.beacon_neighbors(j).contains(&i);
                assert_eq!(i_hears_j, j_hears_i);
            }
        }
    }

    #[test]
    fn overlapping_vehicles_collide_with_named_pair() {
        // a corrupted initial state with non-positive gap is reported as a
        // collision naming the pair; IDM itself never produces one
        let config = base_config();
        let rear = VehicleState::new("rear", 0.0, 30.0, Route::Mainline, 31.0);
        let front = VehicleState::new("front", 4.0, 0.0, Route::Mainline, 31.0);
        let mut world = WorldState::with_vehicles(config, vec![rear, front]).unwrap();
        match world.step(0.05) {
            Err(SimError::Collision {
                follower,
                leader,
                gap,
                ..
            }) => {
                assert_eq!(follower, "rear");
                assert_eq!(leader, "front");
                assert!(gap <= 0.0);
            }
            other => panic!("expected collision, got {other:?}"),
        }
    }

    #[test]
    fn single_vehicle_scenario_has_no_leader() {
        let config = ScenarioConfig {
            n_vehicles: 1,
            initial_vehicles: 0,
            duration: 10.0,
            ..ScenarioConfig::default()
        };
        let outcome = run_scenario(&config).unwrap();
        assert_eq!(outcome.trajectories.len(), 1);
        assert!(outcome.trajectories[0]
            .rows
            .iter()
            .all(|r| r.headway == crate::trace::NO_LEADER_HEADWAY && r.leader_id.is_empty()));
    }

    #[test]
    fn zero_vehicles_is_an_empty_scenario() {
        let config = ScenarioConfig {
            n_vehicles: 0,
            ..ScenarioConfig::default()
        };
        assert!(matches!(
            run_scenario(&config),
            Err(SimError::EmptyScenario)
        ));
    }

    #[test]
    fn fixed_seed_reproduces_identical_trajectories() {
        let config = ScenarioConfig {
            n_vehicles: 20,
            initial_vehicles: 0,
            duration: 30.0,
            rng_seed: 7,
            ..ScenarioConfig::default()
        };
        let a = run_scenario(&config).unwrap();
        let b = run_scenario(&config).unwrap();
        assert_eq!(a.trajectories, b.trajectories);
    }

    #[test]
    fn spawn_gate_enforces_minimum_entry_headway() {
        let config = ScenarioConfig {
            n_vehicles: 15,
            initial_vehicles: 0,
            duration: 40.0,
            mean_entry_headway: 0.1, // far denser than the gate allows
            min_spawn_headway: 2.0,
            ..ScenarioConfig::default()
        };
        let outcome = run_scenario(&config).unwrap();
        for traj in &outcome.trajectories {
            let first = &traj.rows[0];
            if first.headway >= 0.0 {
                assert!(
                    first.headway >= 2.0 - 1e-6,
                    "{} spawned at headway {}",
                    traj.vehicle_id,
                    first.headway
                );
            }
        }
    }

    #[test]
    fn speeds_stay_non_negative_under_hard_regulation() {
        // dense communication-actuated entry produces the strongest braking
        let config = ScenarioConfig {
            n_vehicles: 20,
            initial_vehicles: 0,
            duration: 40.0,
            mean_entry_headway: 0.3,
            min_spawn_headway: 0.4,
            comm_enabled: true,
            lead_desired_speed: 8.0,
            rng_seed: 3,
            ..ScenarioConfig::default()
        };
        let outcome = run_scenario(&config).unwrap();
        for traj in &outcome.trajectories {
            assert!(traj.rows.iter().all(|r| r.speed >= 0.0));
        }
    }

    #[test]
    fn offramp_vehicles_flag_and_slow_down() {
        let config = ScenarioConfig {
            n_vehicles: 1,
            initial_vehicles: 0,
            duration: 120.0,
            offramp_fraction: 1.0,
            corridor_length: 3000.0,
            offramp_position: 1500.0,
            offramp_speed_limit: 18.0,
            entry_speed: 30.0,
            desired_speed: 31.0,
            lead_desired_speed: 31.0,
            ..ScenarioConfig::default()
        };
        let outcome = run_scenario(&config).unwrap();
        let rows = &outcome.trajectories[0].rows;
        assert!(rows.iter().any(|r| r.on_offramp));
        let on_ramp: Vec<_> = rows.iter().filter(|r| r.on_offramp).collect();
        assert!(on_ramp.iter().all(|r| r.x >= 1500.0));
        // by late in the ramp the vehicle respects the ramp limit
        let last = on_ramp.last().unwrap();
        assert!(last.speed <= 18.5, "ramp speed {}", last.speed);
        // mainline portion is not flagged
        assert!(rows.iter().filter(|r| !r.on_offramp).all(|r| r.x < 1500.0));
    }
}
