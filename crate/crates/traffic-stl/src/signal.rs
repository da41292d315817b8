//! Time-series primitives: sampled signals, interpolation, numeric
//! differentiation and exponential smoothing.
//!
//! A [`Signal`] is an ordered list of `(time, value)` samples together with an
//! interpolation mode that defines the value between samples. Vehicle speed
//! and position are continuous quantities and use linear interpolation;
//! headway is a measured ratio that jumps when the leader changes and uses
//! piecewise-constant (left-hold) interpolation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One sample of a real-valued signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Time in seconds. Finite, non-negative for trajectory data.
    pub t: f64,
    /// Sample value; units depend on the channel.
    pub value: f64,
}

impl Sample {
    pub fn new(t: f64, value: f64) -> Self {
        Sample { t, value }
    }
}

/// How a [`Signal`] is valued between samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Interpolation {
    /// Left-hold: the signal keeps the value of the most recent sample.
    Step,
    /// Linear interpolation between neighbouring samples.
    #[default]
    Linear,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SignalError {
    #[error("signal must contain at least one sample")]
    Empty,
    #[error(
        "sample times must be finite and strictly increasing (violated at index {index}: t = {t})"
    )]
    NonIncreasingTime { index: usize, t: f64 },
    #[error("sample value at index {index} is NaN")]
    NanValue { index: usize },
    #[error("time {t} outside signal domain [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },
    #[error("operation needs at least {needed} samples, signal has {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("smoothing factor must lie in (0, 1], got {alpha}")]
    InvalidAlpha { alpha: f64 },
}

/// A sampled real-valued signal over time.
///
/// Invariants, checked at construction: at least one sample, finite and
/// strictly increasing sample times, no NaN values. Infinite values are
/// permitted (robustness signals produced by vacuously true predicates carry
/// them); trajectory channels only ever hold finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<Sample>,
    interpolation: Interpolation,
    unit: String,
}

impl Signal {
    pub fn new(
        samples: Vec<Sample>,
        interpolation: Interpolation,
        unit: impl Into<String>,
    ) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::Empty);
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.t.is_finite() || (i > 0 && s.t <= samples[i - 1].t) {
                return Err(SignalError::NonIncreasingTime { index: i, t: s.t });
            }
            if s.value.is_nan() {
                return Err(SignalError::NanValue { index: i });
            }
        }
        Ok(Signal {
            samples,
            interpolation,
            unit: unit.into(),
        })
    }

    /// Builds a signal from `(t, value)` pairs.
    pub fn from_pairs(
        pairs: impl IntoIterator<Item = (f64, f64)>,
        interpolation: Interpolation,
        unit: impl Into<String>,
    ) -> Result<Self, SignalError> {
        let samples = pairs.into_iter().map(|(t, v)| Sample::new(t, v)).collect();
        Signal::new(samples, interpolation, unit)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one sample
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }

    /// Value of the signal at time `t`.
    ///
    /// Exact at sample points in both interpolation modes; between samples the
    /// interpolation mode applies. `t` outside the sampled domain is an error
    /// naming the valid interval.
    pub fn value_at(&self, t: f64) -> Result<f64, SignalError> {
        let (start, end) = (self.start_time(), self.end_time());
        if !(t >= start && t <= end) {
            return Err(SignalError::OutOfDomain { t, start, end });
        }
        // Index of the last sample with time <= t.
        let idx = match self.samples.partition_point(|s| s.t <= t) {
            0 => 0,
            n => n - 1,
        };
        let left = self.samples[idx];
        if left.t == t || idx + 1 == self.samples.len() {
            return Ok(left.value);
        }
        match self.interpolation {
            Interpolation::Step => Ok(left.value),
            Interpolation::Linear => {
                let right = self.samples[idx + 1];
                let frac = (t - left.t) / (right.t - left.t);
                Ok(left.value + frac * (right.value - left.value))
            }
        }
    }

    /// Numeric time-derivative on the same grid.
    ///
    /// Interior points use central differences
    /// `(value[i+1] - value[i-1]) / (t[i+1] - t[i-1])`; the endpoints use
    /// one-sided differences. Requires at least two samples.
    pub fn derivative(&self) -> Result<Signal, SignalError> {
        let n = self.samples.len();
        if n < 2 {
            return Err(SignalError::InsufficientData { needed: 2, got: n });
        }
        let s = &self.samples;
        let mut out = Vec::with_capacity(n);
        out.push(Sample::new(
            s[0].t,
            (s[1].value - s[0].value) / (s[1].t - s[0].t),
        ));
        for i in 1..n - 1 {
            let d = (s[i + 1].value - s[i - 1].value) / (s[i + 1].t - s[i - 1].t);
            out.push(Sample::new(s[i].t, d));
        }
        out.push(Sample::new(
            s[n - 1].t,
            (s[n - 1].value - s[n - 2].value) / (s[n - 1].t - s[n - 2].t),
        ));
        Signal::new(out, self.interpolation, format!("d({})/dt", self.unit))
    }

    /// Exponential smoothing: `y[0] = x[0]`, `y[i] = alpha*x[i] + (1-alpha)*y[i-1]`.
    ///
    /// `alpha` must lie in `(0, 1]`; `alpha = 1` returns the signal unchanged.
    pub fn exp_smooth(&self, alpha: f64) -> Result<Signal, SignalError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(SignalError::InvalidAlpha { alpha });
        }
        let mut out = Vec::with_capacity(self.samples.len());
        let mut prev = self.samples[0].value;
        out.push(self.samples[0]);
        for s in &self.samples[1..] {
            prev = alpha * s.value + (1.0 - alpha) * prev;
            out.push(Sample::new(s.t, prev));
        }
        Signal::new(out, self.interpolation, self.unit.clone())
    }
}
