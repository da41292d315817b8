//! Offline signal temporal logic monitoring for vehicle trajectories.
//!
//! The crate has four parts:
//!
//! - [`signal`] / [`trace`]: sampled time series with interpolation, numeric
//!   differentiation and exponential smoothing, grouped into per-vehicle
//!   traces (speed, position, headway, ...).
//! - [`stl`]: a formula AST with a small text syntax, and an offline monitor
//!   producing quantitative robustness and boolean satisfaction signals.
//! - [`specs`]: parameterized builders for the traffic safety specifications
//!   (speed limits, safe braking, off-ramp deceleration, headway keeping) and
//!   population-level conformance statistics.
//! - [`sim`]: a single-lane IDM micro-simulator with an off-ramp branch and
//!   periodic position/speed beaconing that lets followers actuate their
//!   acceleration toward a safe time gap.
//!
//! ```
//! use traffic_stl::specs::{build_headway_spec, HeadwaySpecParams};
//! use traffic_stl::stl::monitor;
//! use traffic_stl::trace::{channel, uniform_trace};
//! use traffic_stl::signal::Interpolation;
//!
//! let headways = vec![5.2; 200];
//! let trace = uniform_trace("veh_000", 0.05,
//!     &[(channel::HEADWAY, Interpolation::Step, &headways)]).unwrap();
//! let spec = build_headway_spec(&HeadwaySpecParams::default()).unwrap();
//! let verdict = monitor(&spec, &trace).unwrap();
//! assert!(verdict.satisfied());
//! ```

pub mod io;
pub mod signal;
pub mod sim;
pub mod specs;
pub mod stl;
pub mod trace;

pub use signal::{Interpolation, Sample, Signal, SignalError};
pub use stl::{monitor, parse, Formula, Verdict};
pub use trace::{Trace, TraceError};
