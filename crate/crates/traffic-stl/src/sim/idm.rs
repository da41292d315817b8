//! Intelligent Driver Model car-following kernel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// IDM parameters. Defaults: maximum acceleration 1.4 m/s^2, comfortable
/// deceleration 2.0 m/s^2, safety time gap 4 s, jam distance 2 m, desired
/// speed 31 m/s, acceleration exponent 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Maximum acceleration `a`, m/s^2.
    pub a_max: f64,
    /// Comfortable (desired) deceleration `b`, m/s^2.
    pub b_comf: f64,
    /// Safety time gap `T`, s.
    pub t_gap: f64,
    /// Jam distance `s0`, m.
    pub s0: f64,
    /// Desired speed `v0`, m/s.
    pub v0: f64,
    /// Acceleration exponent `delta`.
    pub delta: f64,
}

impl Default for IdmParams {
    fn default() -> Self {
        IdmParams {
            a_max: 1.4,
            b_comf: 2.0,
            t_gap: 4.0,
            s0: 2.0,
            v0: 31.0,
            delta: 4.0,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IdmError {
    #[error("non-positive gap {gap:.3} m indicates a collision state")]
    CollisionState { gap: f64 },
}

/// Desired minimum gap `s* = s0 + v*T + v*dv / (2*sqrt(a*b))`.
///
/// `dv` is the closing speed (follower speed minus leader speed). The raw
/// formula value is returned: for negative closing speeds the dynamic term
/// can push the result below `s0`, and clamping is the caller's decision.
pub fn desired_gap(v: f64, dv: f64, p: &IdmParams) -> f64 {
    p.s0 + v * p.t_gap + v * dv / (2.0 * (p.a_max * p.b_comf).sqrt())
}

/// IDM acceleration `a * [1 - (v/v0)^delta - (s*/s)^2]` for a follower at
/// speed `v` with gap `s` to its leader and closing speed `dv`.
///
/// The desired gap fed into the interaction term is clamped at `s0` so a
/// rapidly opening gap cannot produce an imaginary braking target. A
/// non-positive gap is a collision state and an error.
pub fn idm_acceleration(s: f64, v: f64, dv: f64, p: &IdmParams) -> Result<f64, IdmError> {
    if s <= 0.0 {
        return Err(IdmError::CollisionState { gap: s });
    }
    let star = desired_gap(v, dv, p).max(p.s0);
    Ok(p.a_max * (1.0 - (v / p.v0).powf(p.delta) - (star / s).powi(2)))
}

/// Free-flow IDM acceleration (no leader): `a * [1 - (v/v0)^delta]`.
pub fn free_flow_acceleration(v: f64, p: &IdmParams) -> f64 {
    p.a_max * (1.0 - (v / p.v0).powf(p.delta))
}
