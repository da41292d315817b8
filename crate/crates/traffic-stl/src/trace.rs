//! Per-vehicle trajectory traces: named channels over a shared time domain.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::signal::{Interpolation, Signal, SignalError};

/// Well-known channel names used by the simulator and the built-in
/// specifications.
pub mod channel {
    pub const POSITION: &str = "x";
    pub const SPEED: &str = "speed";
    pub const HEADWAY: &str = "headway";
    pub const ACCEL: &str = "accel";
    pub const JERK: &str = "jerk";
    pub const ON_OFFRAMP: &str = "on_offramp";
}

/// Headway convention: any negative sample means "no leader vehicle".
/// The raw value is preserved in storage and masked at specification level.
pub const NO_LEADER_HEADWAY: f64 = -1.0;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TraceError {
    #[error("trace {vehicle_id} has no channels")]
    NoChannels { vehicle_id: String },
    #[error("trace {vehicle_id}: channel time spans do not overlap")]
    DisjointChannels { vehicle_id: String },
    #[error("trace {vehicle_id} is missing channel '{channel}'")]
    MissingChannel { vehicle_id: String, channel: String },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// A named collection of time-aligned signals for one vehicle.
///
/// Channels may be sampled on different grids, but they share the trace's
/// time domain: the domain is the intersection of the channel spans, and
/// every channel is defined over all of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    vehicle_id: String,
    channels: BTreeMap<String, Signal>,
    time_domain: (f64, f64),
}

impl Trace {
    pub fn new(
        vehicle_id: impl Into<String>,
        channels: BTreeMap<String, Signal>,
    ) -> Result<Self, TraceError> {
        let vehicle_id = vehicle_id.into();
        if channels.is_empty() {
            return Err(TraceError::NoChannels { vehicle_id });
        }
        let start = channels
            .values()
            .map(Signal::start_time)
            .fold(f64::NEG_INFINITY, f64::max);
        let end = channels
            .values()
            .map(Signal::end_time)
            .fold(f64::INFINITY, f64::min);
        if start > end {
            return Err(TraceError::DisjointChannels { vehicle_id });
        }
        Ok(Trace {
            vehicle_id,
            channels,
            time_domain: (start, end),
        })
    }

    pub fn vehicle_id(&self) -> &str {
        &self.vehicle_id
    }

    pub fn time_domain(&self) -> (f64, f64) {
        self.time_domain
    }

    pub fn channel(&self, name: &str) -> Option<&Signal> {
        self.channels.get(name)
    }

    pub fn channel_or_err(&self, name: &str) -> Result<&Signal, TraceError> {
        self.channels
            .get(name)
            .ok_or_else(|| TraceError::MissingChannel {
                vehicle_id: self.vehicle_id.clone(),
                channel: name.to_string(),
            })
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(String::as_str)
    }

    pub fn has_channel(&self, name: &str) -> bool {
        self.channels.contains_key(name)
    }

    /// Returns a copy of the trace with `name` added or replaced.
    pub fn with_channel(
        &self,
        name: impl Into<String>,
        signal: Signal,
    ) -> Result<Self, TraceError> {
        let mut channels = self.channels.clone();
        channels.insert(name.into(), signal);
        Trace::new(self.vehicle_id.clone(), channels)
    }
}

/// How acceleration and jerk are produced from the speed channel when a
/// specification needs them and the trace does not carry them.
///
/// High sampling rates make finite differences noisy, so both derived
/// channels are exponentially smoothed by default. `jerk_from_smoothed_accel`
/// selects whether jerk differentiates the smoothed or the raw acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionDerivation {
    /// Smoothing factor; `None` disables smoothing entirely.
    pub alpha: Option<f64>,
    /// `true`: jerk = smooth(d/dt smooth(accel_raw)); `false`: jerk = smooth(d/dt accel_raw).
    pub jerk_from_smoothed_accel: bool,
}

impl Default for MotionDerivation {
    fn default() -> Self {
        MotionDerivation {
            alpha: Some(0.3),
            jerk_from_smoothed_accel: true,
        }
    }
}

impl MotionDerivation {
    pub fn raw() -> Self {
        MotionDerivation {
            alpha: None,
            jerk_from_smoothed_accel: true,
        }
    }

    fn smooth(&self, signal: Signal) -> Result<Signal, SignalError> {
        match self.alpha {
            Some(alpha) => signal.exp_smooth(alpha),
            None => Ok(signal),
        }
    }

    /// Ensures `accel` and `jerk` channels exist, deriving them from `speed`
    /// when absent. Channels already present are left untouched.
    pub fn ensure_motion_channels(&self, trace: &Trace) -> Result<Trace, TraceError> {
        if trace.has_channel(channel::ACCEL) && trace.has_channel(channel::JERK) {
            return Ok(trace.clone());
        }
        let mut out = trace.clone();
        let accel_raw = match trace.channel(channel::ACCEL) {
            Some(a) => a.clone(),
            None => {
                let speed = trace.channel_or_err(channel::SPEED)?;
                speed.derivative()?
            }
        };
        let accel_smooth = self.smooth(accel_raw.clone())?;
        if !out.has_channel(channel::ACCEL) {
            out = out.with_channel(channel::ACCEL, accel_smooth.clone())?;
        }
        if !out.has_channel(channel::JERK) {
            let jerk_base = if self.jerk_from_smoothed_accel {
                accel_smooth
            } else {
                accel_raw
            };
            let jerk = self.smooth(jerk_base.derivative()?)?;
            out = out.with_channel(channel::JERK, jerk)?;
        }
        Ok(out)
    }
}

/// Convenience constructor for a trace sampled on one uniform grid.
pub fn uniform_trace(
    vehicle_id: &str,
    dt: f64,
    channels: &[(&str, Interpolation, &[f64])],
) -> Result<Trace, TraceError> {
    let mut map = BTreeMap::new();
    for (name, mode, values) in channels {
        let pairs = values.iter().enumerate().map(|(i, v)| (i as f64 * dt, *v));
        map.insert(name.to_string(), Signal::from_pairs(pairs, *mode, "")?);
    }
    Trace::new(vehicle_id, map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_domain_is_intersection_of_channels() {
        let mut channels = BTreeMap::new();
        channels.insert(
            "a".to_string(),
            Signal::from_pairs([(0.0, 1.0), (10.0, 1.0)], Interpolation::Linear, "").unwrap(),
        );
        channels.insert(
            "b".to_string(),
            Signal::from_pairs([(2.0, 1.0), (8.0, 1.0)], Interpolation::Step, "").unwrap(),
        );
        let trace = Trace::new("v1", channels).unwrap();
        assert_eq!(trace.time_domain(), (2.0, 8.0));
    }

    #[test]
    fn disjoint_channels_rejected() {
        let mut channels = BTreeMap::new();
        channels.insert(
            "a".to_string(),
            Signal::from_pairs([(0.0, 1.0), (1.0, 1.0)], Interpolation::Linear, "").unwrap(),
        );
        channels.insert(
            "b".to_string(),
            Signal::from_pairs([(5.0, 1.0), (6.0, 1.0)], Interpolation::Linear, "").unwrap(),
        );
        assert!(matches!(
            Trace::new("v1", channels),
            Err(TraceError::DisjointChannels { .. })
        ));
    }

    #[test]
    fn derives_accel_and_jerk_from_speed() {
        // linear deceleration: accel is constant, jerk is zero, and smoothing
        // leaves both untouched
        let speeds: Vec<f64> = (0..40).map(|i| 30.0 - 2.0 * (i as f64) * 0.05).collect();
        let trace = uniform_trace(
            "v",
            0.05,
            &[(channel::SPEED, Interpolation::Linear, &speeds)],
        )
        .unwrap();
        let derived = MotionDerivation::default()
            .ensure_motion_channels(&trace)
            .unwrap();
        let accel = derived.channel(channel::ACCEL).unwrap();
        let jerk = derived.channel(channel::JERK).unwrap();
        for v in accel.values() {
            assert!((v + 2.0).abs() < 1e-9, "accel {v}");
        }
        for v in jerk.values() {
            assert!(v.abs() < 1e-9, "jerk {v}");
        }
    }

    #[test]
    fn existing_motion_channels_are_kept() {
        let trace = uniform_trace(
            "v",
            0.5,
            &[
                (channel::SPEED, Interpolation::Linear, &[1.0, 5.0, 1.0]),
                (channel::ACCEL, Interpolation::Linear, &[0.0, 0.0, 0.0]),
                (channel::JERK, Interpolation::Linear, &[0.0, 0.0, 0.0]),
            ],
        )
        .unwrap();
        let derived = MotionDerivation::default()
            .ensure_motion_channels(&trace)
            .unwrap();
        assert_eq!(&derived, &trace);
    }

    #[test]
    fn missing_speed_reported_when_deriving() {
        let trace = uniform_trace(
            "v",
            1.0,
            &[(channel::HEADWAY, Interpolation::Step, &[5.0, 5.0])],
        )
        .unwrap();
        match MotionDerivation::default().ensure_motion_channels(&trace) {
            Err(TraceError::MissingChannel { channel, .. }) => assert_eq!(channel, "speed"),
            other => panic!("expected missing-channel error, got {other:?}"),
        }
    }
}
