//! Built-in traffic safety specifications and population-level conformance
//! statistics.
//!
//! Four parameterized specifications cover speed limits, safe braking,
//! off-ramp deceleration, and headway keeping. The speed and headway builders
//! default to the recovery reading — a violation of the band is tolerated if
//! the signal recovers within a configured window — and expose a `literal`
//! flag that reproduces the alternative connective arrangement (a disjunction
//! of implications for speed, an outright conjunction for headway) for
//! comparison.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stl::ast::{Comparison, Formula, Interval, Predicate};
use crate::stl::eval::{monitor, EvalError, Verdict};
use crate::trace::{channel, MotionDerivation, Trace, TraceError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpecError {
    #[error("invalid specification parameters: {0}")]
    InvalidParams(String),
    #[error("unknown specification '{name}'; available: {available}")]
    UnknownSpec { name: String, available: String },
    #[error("unknown parameter '{key}' for specification '{spec}'; valid keys: {valid}")]
    UnknownParam {
        spec: String,
        key: String,
        valid: String,
    },
    #[error("population is empty")]
    EmptyPopulation,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Parameters of the speed-limit specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedSpecParams {
    /// Minimum allowed speed, m/s.
    pub v_min: f64,
    /// Maximum allowed speed, m/s.
    pub v_max: f64,
    /// Tolerated overshoot above `v_max` before recovery is demanded, m/s.
    pub v_err: f64,
    /// Window within which an out-of-band excursion must recover, s.
    pub recovery_t: f64,
    /// Use the literal disjunction-of-implications arrangement instead of the
    /// recovery reading.
    pub literal: bool,
}

impl Default for SpeedSpecParams {
    fn default() -> Self {
        SpeedSpecParams {
            v_min: 22.5,
            v_max: 31.0,
            v_err: 0.0,
            recovery_t: 5.0,
            literal: false,
        }
    }
}

/// Parameters of the safe-braking specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrakingSpecParams {
    /// Acceleration floor, m/s^2 (strictly negative).
    pub accel_floor: f64,
    /// Jerk floor, m/s^3 (strictly negative); marks safety-critical braking.
    pub jerk_floor: f64,
}

impl Default for BrakingSpecParams {
    fn default() -> Self {
        BrakingSpecParams {
            accel_floor: -7.7,
            jerk_floor: -9.9,
        }
    }
}

/// Parameters of the off-ramp deceleration specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfframpSpecParams {
    /// Off-ramp speed limit, m/s.
    pub speed_limit: f64,
    pub braking: BrakingSpecParams,
}

impl Default for OfframpSpecParams {
    fn default() -> Self {
        OfframpSpecParams {
            speed_limit: 18.0,
            braking: BrakingSpecParams::default(),
        }
    }
}

/// Parameters of the headway-keeping specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadwaySpecParams {
    /// Minimum time headway, s.
    pub h_min: f64,
    /// Window within which a headway dip must recover, s.
    pub recovery_t: f64,
    /// Conjoin the band atom with the recovery implication instead of
    /// disjoining them.
    pub literal: bool,
}

impl Default for HeadwaySpecParams {
    fn default() -> Self {
        HeadwaySpecParams {
            h_min: 4.0,
            recovery_t: 2.0,
            literal: false,
        }
    }
}

fn finite_positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn speed_atom(cmp: Comparison, threshold: f64) -> Formula {
    Formula::atom(channel::SPEED, cmp, threshold)
}

/// Headway atoms are vacuously true while the vehicle has no leader
/// (negative headway samples).
fn headway_atom(cmp: Comparison, threshold: f64) -> Formula {
    Formula::Atom(Predicate::new(channel::HEADWAY, cmp, threshold).with_mask(
        channel::HEADWAY,
        Comparison::Lt,
        0.0,
    ))
}

/// Speed must stay within `[v_min, v_max]`; excursions past the tolerated
/// band must return within `recovery_t` seconds.
pub fn build_speed_spec(p: &SpeedSpecParams) -> Result<Formula, SpecError> {
    if !(p.v_min.is_finite() && p.v_max.is_finite() && p.v_min < p.v_max) {
        return Err(SpecError::InvalidParams(format!(
            "v_min ({}) must be below v_max ({})",
            p.v_min, p.v_max
        )));
    }
    if !(p.v_err.is_finite() && p.v_err >= 0.0) {
        return Err(SpecError::InvalidParams(format!(
            "v_err ({}) must be >= 0",
            p.v_err
        )));
    }
    if !finite_positive(p.recovery_t) {
        return Err(SpecError::InvalidParams(format!(
            "recovery_t ({}) must be > 0",
            p.recovery_t
        )));
    }
    let recovery = Interval::bounded(0.0, p.recovery_t).expect("validated above");
    let band = Formula::and(
        speed_atom(Comparison::Ge, p.v_min),
        speed_atom(Comparison::Le, p.v_max),
    );
    let over = Formula::implies(
        speed_atom(Comparison::Gt, p.v_max + p.v_err),
        Formula::eventually(recovery, speed_atom(Comparison::Le, p.v_max)),
    );
    let under = Formula::implies(
        speed_atom(Comparison::Lt, p.v_min),
        Formula::eventually(recovery, speed_atom(Comparison::Ge, p.v_min)),
    );
    let body = if p.literal {
        // a bare disjunction: vacuously true whenever either antecedent fails
        Formula::or(band, Formula::or(over, under))
    } else {
        Formula::or(band, Formula::and(over, under))
    };
    Ok(Formula::always(Interval::full(), body))
}

/// Acceleration and jerk must both stay above their (negative) floors at all
/// times.
pub fn build_braking_spec(p: &BrakingSpecParams) -> Result<Formula, SpecError> {
    if !(p.accel_floor.is_finite()
        && p.accel_floor < 0.0
        && p.jerk_floor.is_finite()
        && p.jerk_floor < 0.0)
    {
        return Err(SpecError::InvalidParams(format!(
            "braking floors must be strictly negative (accel {}, jerk {})",
            p.accel_floor, p.jerk_floor
        )));
    }
    Ok(Formula::always(Interval::full(), braking_body(p)))
}

fn braking_body(p: &BrakingSpecParams) -> Formula {
    Formula::and(
        Formula::atom(channel::ACCEL, Comparison::Gt, p.accel_floor),
        Formula::atom(channel::JERK, Comparison::Gt, p.jerk_floor),
    )
}

/// A vehicle above the off-ramp speed limit must keep braking comfortably
/// until its speed drops to the limit. Applies to trajectories that use the
/// off-ramp; the caller filters by the `on_offramp` channel.
pub fn build_offramp_spec(p: &OfframpSpecParams) -> Result<Formula, SpecError> {
    if !finite_positive(p.speed_limit) {
        return Err(SpecError::InvalidParams(format!(
            "speed_limit ({}) must be > 0",
            p.speed_limit
        )));
    }
    if !(p.braking.accel_floor.is_finite()
        && p.braking.accel_floor < 0.0
        && p.braking.jerk_floor.is_finite()
        && p.braking.jerk_floor < 0.0)
    {
        return Err(SpecError::InvalidParams(
            "braking floors must be strictly negative".to_string(),
        ));
    }
    let below = speed_atom(Comparison::Le, p.speed_limit);
    let above = speed_atom(Comparison::Gt, p.speed_limit);
    let decelerate = Formula::until(
        Interval::full(),
        braking_body(&p.braking),
        speed_atom(Comparison::Le, p.speed_limit),
    );
    Ok(Formula::always(
        Interval::full(),
        Formula::or(below, Formula::implies(above, decelerate)),
    ))
}

/// Headway must stay at or above `h_min` seconds; dips must recover within
/// `recovery_t`. Leaderless periods (negative headway) are unconstrained.
pub fn build_headway_spec(p: &HeadwaySpecParams) -> Result<Formula, SpecError> {
    if !finite_positive(p.h_min) {
        return Err(SpecError::InvalidParams(format!(
            "h_min ({}) must be > 0",
            p.h_min
        )));
    }
    if !finite_positive(p.recovery_t) {
        return Err(SpecError::InvalidParams(format!(
            "recovery_t ({}) must be > 0",
            p.recovery_t
        )));
    }
    let recovery = Interval::bounded(0.0, p.recovery_t).expect("validated above");
    let band = headway_atom(Comparison::Ge, p.h_min);
    let recover = Formula::implies(
        headway_atom(Comparison::Lt, p.h_min),
        Formula::eventually(recovery, headway_atom(Comparison::Ge, p.h_min)),
    );
    let body = if p.literal {
        Formula::and(band, recover)
    } else {
        Formula::or(band, recover)
    };
    Ok(Formula::always(Interval::full(), body))
}

/// Per-group statistics of a conformance partition. `mean`/`std_dev` are
/// absent for an empty group (or when no trace in the group carries a usable
/// sample of the statistic channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub volume: usize,
    pub mean: Option<f64>,
    pub std_dev: Option<f64>,
}

/// Conforming-vs-violating partition of a trajectory population with volume,
/// mean and standard deviation of a chosen channel per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub spec_name: String,
    pub statistic_channel: String,
    pub conforming: GroupStats,
    pub violating: GroupStats,
}

/// Mean of a trace's channel samples. For the headway channel only the
/// non-masked (non-negative) samples count; a trace without usable samples
/// yields `None`.
pub fn per_trace_mean(trace: &Trace, channel_name: &str) -> Result<Option<f64>, SpecError> {
    let signal = trace.channel_or_err(channel_name)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for v in signal.values() {
        if channel_name == channel::HEADWAY && v < 0.0 {
            continue;
        }
        sum += v;
        count += 1;
    }
    Ok((count > 0).then(|| sum / count as f64))
}

/// Assembles a report from per-group volumes and per-trace means; used by
/// [`evaluate_population`] and by the CLI when rebuilding statistics from
/// stored verdicts.
pub fn build_report(
    spec_name: impl Into<String>,
    statistic_channel: impl Into<String>,
    conforming_means: &[f64],
    conforming_volume: usize,
    violating_means: &[f64],
    violating_volume: usize,
) -> ConformanceReport {
    ConformanceReport {
        spec_name: spec_name.into(),
        statistic_channel: statistic_channel.into(),
        conforming: group_stats(conforming_means, conforming_volume),
        violating: group_stats(violating_means, violating_volume),
    }
}

fn group_stats(means: &[f64], volume: usize) -> GroupStats {
    if means.is_empty() {
        return GroupStats {
            volume,
            mean: None,
            std_dev: None,
        };
    }
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n;
    GroupStats {
        volume,
        mean: Some(mean),
        std_dev: Some(var.sqrt()),
    }
}

/// Options for [`evaluate_population`].
#[derive(Debug, Clone)]
pub struct PopulationOptions {
    pub spec_name: String,
    pub statistic_channel: String,
    /// How missing acceleration/jerk channels are derived when the formula
    /// needs them.
    pub derivation: MotionDerivation,
}

impl PopulationOptions {
    pub fn new(spec_name: impl Into<String>, statistic_channel: impl Into<String>) -> Self {
        PopulationOptions {
            spec_name: spec_name.into(),
            statistic_channel: statistic_channel.into(),
            derivation: MotionDerivation::default(),
        }
    }
}

/// Result of monitoring a whole population: the aggregate report plus the
/// per-trace verdicts in input order.
#[derive(Debug, Clone)]
pub struct PopulationEvaluation {
    pub report: ConformanceReport,
    pub verdicts: Vec<Verdict>,
}

/// Monitors every trace against `formula` and partitions the population into
/// conforming and violating groups.
///
/// A trace conforms iff its summary robustness is strictly positive. Traces
/// are monitored in parallel; the result does not depend on evaluation order.
pub fn evaluate_population(
    traces: &[Trace],
    formula: &Formula,
    options: &PopulationOptions,
) -> Result<PopulationEvaluation, SpecError> {
    if traces.is_empty() {
        return Err(SpecError::EmptyPopulation);
    }
    let needs_motion = {
        let chans = formula.channels();
        chans.contains(channel::ACCEL) || chans.contains(channel::JERK)
    };
    let per_trace: Result<Vec<(Verdict, Option<f64>)>, SpecError> = traces
        .par_iter()
        .map(|trace| {
            let prepared = if needs_motion {
                options.derivation.ensure_motion_channels(trace)?
            } else {
                trace.clone()
            };
            let verdict = monitor(formula, &prepared)?;
            let mean = per_trace_mean(&prepared, &options.statistic_channel)?;
            Ok((verdict, mean))
        })
        .collect();
    let per_trace = per_trace?;

    let mut conforming_means = Vec::new();
    let mut violating_means = Vec::new();
    let mut conforming_volume = 0usize;
    let mut violating_volume = 0usize;
    for (verdict, mean) in &per_trace {
        if verdict.satisfied() {
            conforming_volume += 1;
            if let Some(m) = mean {
                conforming_means.push(*m);
            }
        } else {
            violating_volume += 1;
            if let Some(m) = mean {
                violating_means.push(*m);
            }
        }
    }
    let report = build_report(
        options.spec_name.clone(),
        options.statistic_channel.clone(),
        &conforming_means,
        conforming_volume,
        &violating_means,
        violating_volume,
    );
    Ok(PopulationEvaluation {
        report,
        verdicts: per_trace.into_iter().map(|(v, _)| v).collect(),
    })
}

/// A named built-in specification resolved from the CLI surface.
#[derive(Debug, Clone)]
pub struct NamedSpec {
    pub name: String,
    pub formula: Formula,
    /// Channel the conformance tables aggregate by default.
    pub default_statistic_channel: &'static str,
    /// Whether the formula needs derived acceleration/jerk channels.
    pub requires_motion_channels: bool,
    /// Whether the spec applies only to trajectories that use the off-ramp.
    pub offramp_only: bool,
}

pub const AVAILABLE_SPECS: [&str; 4] = ["speed", "braking", "offramp", "headway"];

fn take(overrides: &mut BTreeMap<String, f64>, key: &str) -> Option<f64> {
    overrides.remove(key)
}

fn reject_leftovers(
    spec: &str,
    overrides: BTreeMap<String, f64>,
    valid: &[&str],
) -> Result<(), SpecError> {
    if let Some(key) = overrides.into_keys().next() {
        return Err(SpecError::UnknownParam {
            spec: spec.to_string(),
            key,
            valid: valid.join(", "),
        });
    }
    Ok(())
}

/// Builds one of the built-in specifications by name, applying `key=value`
/// parameter overrides. Boolean flags (`literal`) take 0/1.
pub fn build_named_spec(
    name: &str,
    overrides: &BTreeMap<String, f64>,
) -> Result<NamedSpec, SpecError> {
    let mut ov = overrides.clone();
    let spec = match name {
        "speed" => {
            let mut p = SpeedSpecParams::default();
            if let Some(v) = take(&mut ov, "v_min") {
                p.v_min = v;
            }
            if let Some(v) = take(&mut ov, "v_max") {
                p.v_max = v;
            }
            if let Some(v) = take(&mut ov, "v_err") {
                p.v_err = v;
            }
            if let Some(v) = take(&mut ov, "recovery_t") {
                p.recovery_t = v;
            }
            if let Some(v) = take(&mut ov, "literal") {
                p.literal = v != 0.0;
            }
            reject_leftovers(
                name,
                ov,
                &["v_min", "v_max", "v_err", "recovery_t", "literal"],
            )?;
            NamedSpec {
                name: name.to_string(),
                formula: build_speed_spec(&p)?,
                default_statistic_channel: channel::SPEED,
                requires_motion_channels: false,
                offramp_only: false,
            }
        }
        "braking" => {
            let mut p = BrakingSpecParams::default();
            if let Some(v) = take(&mut ov, "a_floor") {
                p.accel_floor = v;
            }
            if let Some(v) = take(&mut ov, "j_floor") {
                p.jerk_floor = v;
            }
            reject_leftovers(name, ov, &["a_floor", "j_floor"])?;
            NamedSpec {
                name: name.to_string(),
                formula: build_braking_spec(&p)?,
                default_statistic_channel: channel::SPEED,
                requires_motion_channels: true,
                offramp_only: false,
            }
        }
        "offramp" => {
            let mut p = OfframpSpecParams::default();
            if let Some(v) = take(&mut ov, "v_sl") {
                p.speed_limit = v;
            }
            if let Some(v) = take(&mut ov, "a_floor") {
                p.braking.accel_floor = v;
            }
            if let Some(v) = take(&mut ov, "j_floor") {
                p.braking.jerk_floor = v;
            }
            reject_leftovers(name, ov, &["v_sl", "a_floor", "j_floor"])?;
            NamedSpec {
                name: name.to_string(),
                formula: build_offramp_spec(&p)?,
                default_statistic_channel: channel::SPEED,
                requires_motion_channels: true,
                offramp_only: true,
            }
        }
        "headway" => {
            let mut p = HeadwaySpecParams::default();
            if let Some(v) = take(&mut ov, "h_min") {
                p.h_min = v;
            }
            if let Some(v) = take(&mut ov, "recovery_t") {
                p.recovery_t = v;
            }
            if let Some(v) = take(&mut ov, "literal") {
                p.literal = v != 0.0;
            }
            reject_leftovers(name, ov, &["h_min", "recovery_t", "literal"])?;
            NamedSpec {
                name: name.to_string(),
                formula: build_headway_spec(&p)?,
                default_statistic_channel: channel::HEADWAY,
                requires_motion_channels: false,
                offramp_only: false,
            }
        }
        other => {
            return Err(SpecError::UnknownSpec {
                name: other.to_string(),
                available: AVAILABLE_SPECS.join(", "),
            });
        }
    };
    Ok(spec)
}
