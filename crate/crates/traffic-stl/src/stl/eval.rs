//! Offline evaluation of formulas over traces.
//!
//! [`monitor`] produces a [`Verdict`]: the quantitative robustness signal
//! sampled at every trace sample time within the formula's horizon, the
//! derived boolean satisfaction signal, and the scalar summary (robustness at
//! the start of the trace). Robustness follows the usual space semantics:
//! negation flips the sign, conjunction takes the pointwise minimum,
//! disjunction the maximum, `always`/`eventually` the window infimum and
//! supremum, and `until` the sup-min combination of the two operands.
//!
//! Evaluation happens at sample times only; interpolation defines atom values
//! between samples of an individual channel. Temporal windows `[t+a, t+b]`
//! include every sample time in the closed interval (with a 1e-9 tolerance on
//! the boundaries). A formula of temporal depth `D` is only well-defined up to
//! `t_end - D`; the verdict records that horizon rather than guessing values
//! past the end of the trace.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::signal::{Interpolation, Signal, SignalError};
use crate::stl::ast::{Formula, Interval, IntervalEnd, Predicate};
use crate::stl::window::{sliding_extremum, suffix_extremum, Extremum, TIME_EPS};
use crate::trace::{Trace, TraceError};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("trace {vehicle_id} is missing channel '{channel}' required by the formula")]
    MissingChannel { vehicle_id: String, channel: String },
    #[error(
        "formula horizon is empty: temporal depth {required}s exceeds trace duration {available}s \
         (the trace must extend at least {required}s past its first sample)"
    )]
    EmptyHorizon { required: f64, available: f64 },
    #[error("time {t} is outside the formula horizon [{start}, {end}]")]
    OutsideHorizon { t: f64, start: f64, end: f64 },
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Monitoring result for one (trace, formula) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub vehicle_id: String,
    /// Quantitative robustness at every sample time within the horizon.
    pub robustness: Signal,
    /// Boolean satisfaction encoded as -1.0 / +1.0; positive iff the
    /// robustness is strictly positive (zero counts as violating).
    pub satisfaction: Signal,
    /// Robustness at the start of the trace.
    pub summary: f64,
    /// Sub-domain of the trace on which the formula is well-defined.
    pub horizon: (f64, f64),
}

impl Verdict {
    pub fn satisfied(&self) -> bool {
        self.summary > 0.0
    }
}

struct EvalCtx<'a> {
    grid: Vec<f64>,
    values: BTreeMap<&'a str, Vec<f64>>,
    t_end: f64,
}

impl<'a> EvalCtx<'a> {
    fn build(formula: &'a Formula, trace: &'a Trace) -> Result<Self, EvalError> {
        let channels = formula.channels();
        let (t0, t_end) = trace.time_domain();
        let mut grid: Vec<f64> = Vec::new();
        for name in &channels {
            let signal = trace
                .channel(name)
                .ok_or_else(|| EvalError::MissingChannel {
                    vehicle_id: trace.vehicle_id().to_string(),
                    channel: name.to_string(),
                })?;
            grid.extend(signal.times().filter(|&t| t >= t0 && t <= t_end));
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        let mut values = BTreeMap::new();
        for name in channels {
            let signal = trace.channel(name).expect("checked above");
            let sampled: Result<Vec<f64>, SignalError> =
                grid.iter().map(|&t| signal.value_at(t)).collect();
            values.insert(name, sampled?);
        }
        Ok(EvalCtx {
            grid,
            values,
            t_end,
        })
    }

    /// Number of grid points at which a node of the given temporal depth is
    /// well-defined.
    fn valid_len(&self, depth: f64) -> usize {
        let cutoff = self.t_end - depth + TIME_EPS;
        self.grid.partition_point(|&t| t <= cutoff)
    }

    fn channel(&self, name: &str) -> &[f64] {
        self.values
            .get(name)
            .expect("channel cache covers formula channels")
    }

    fn atom_at(&self, pred: &Predicate, idx: usize) -> f64 {
        if let Some(mask) = &pred.mask {
            let guard = self.channel(&mask.channel)[idx];
            if mask.comparison.margin(guard, mask.threshold) > 0.0 {
                return f64::INFINITY;
            }
        }
        pred.comparison
            .margin(self.channel(&pred.channel)[idx], pred.threshold)
    }

    fn eval(&self, formula: &Formula) -> Vec<f64> {
        match formula {
            Formula::Atom(pred) => (0..self.valid_len(0.0))
                .map(|i| self.atom_at(pred, i))
                .collect(),
            Formula::Not(f) => self.eval(f).into_iter().map(|v| -v).collect(),
            Formula::And(l, r) => zip_with(self.eval(l), self.eval(r), f64::min),
            Formula::Or(l, r) => zip_with(self.eval(l), self.eval(r), f64::max),
            Formula::Implies(l, r) => zip_with(self.eval(l), self.eval(r), |a, b| (-a).max(b)),
            Formula::Always(iv, f) => self.eval_window(iv, f, Extremum::Min),
            Formula::Eventually(iv, f) => self.eval_window(iv, f, Extremum::Max),
            Formula::Until(iv, l, r) => self.eval_until(iv, l, r),
        }
    }

    fn eval_window(&self, iv: &Interval, child: &Formula, kind: Extremum) -> Vec<f64> {
        let cv = self.eval(child);
        let n_out = self.valid_len(iv.depth() + child.temporal_depth());
        match iv.end() {
            IntervalEnd::At(b) => sliding_extremum(&self.grid, &cv, iv.start(), b, kind, n_out),
            IntervalEnd::TraceEnd => suffix_extremum(&self.grid, &cv, iv.start(), kind, n_out),
        }
    }

    fn eval_until(&self, iv: &Interval, lhs: &Formula, rhs: &Formula) -> Vec<f64> {
        let lv = self.eval(lhs);
        let rv = self.eval(rhs);
        let limit = lv.len().min(rv.len());
        let child_depth = lhs.temporal_depth().max(rhs.temporal_depth());
        let n_out = self.valid_len(iv.depth() + child_depth);
        let a = iv.start();
        match iv.end() {
            IntervalEnd::At(b) => {
                // direct sup-min scan; window widths are bounded so the cost
                // stays O(n * window)
                let mut out = Vec::with_capacity(n_out);
                for i in 0..n_out {
                    let lo_t = self.grid[i] + a - TIME_EPS;
                    let hi_t = self.grid[i] + b + TIME_EPS;
                    let mut prefix = f64::INFINITY;
                    let mut acc = f64::NEG_INFINITY;
                    let mut k = i;
                    while k < limit && self.grid[k] <= hi_t {
                        prefix = prefix.min(lv[k]);
                        if self.grid[k] >= lo_t {
                            acc = acc.max(rv[k].min(prefix));
                        }
                        k += 1;
                    }
                    out.push(acc);
                }
                out
            }
            IntervalEnd::TraceEnd => {
                // backward recursion for the untimed core:
                // U[i] = max(min(lv[i], rv[i]), min(lv[i], U[i+1]))
                let mut core = vec![f64::NEG_INFINITY; limit];
                let mut next = f64::NEG_INFINITY;
                for i in (0..limit).rev() {
                    let here = lv[i].min(rv[i]);
                    next = here.max(lv[i].min(next));
                    core[i] = next;
                }
                if a == 0.0 {
                    core.truncate(n_out);
                    return core;
                }
                // U[a,end](i) = min( inf of lv over [t_i, t_i+a], U[m_i] )
                // where m_i is the first grid index at or past t_i + a; the
                // closed prefix window is safe because U[m] <= lv[m]
                let prefix =
                    sliding_extremum(&self.grid, &lv[..limit], 0.0, a, Extremum::Min, n_out);
                let mut out = Vec::with_capacity(n_out);
                let mut m = 0usize;
                for (i, &head) in prefix.iter().enumerate() {
                    let lo_t = self.grid[i] + a - TIME_EPS;
                    if m < i {
                        m = i;
                    }
                    while m < limit && self.grid[m] < lo_t {
                        m += 1;
                    }
                    let tail = if m < limit {
                        core[m]
                    } else {
                        f64::NEG_INFINITY
                    };
                    out.push(head.min(tail));
                }
                out
            }
        }
    }
}

fn zip_with(lhs: Vec<f64>, rhs: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    lhs.into_iter().zip(rhs).map(|(a, b)| f(a, b)).collect()
}

/// Evaluates `formula` over the whole trace, producing robustness and
/// satisfaction signals on the formula's horizon.
///
/// Bounded `always`/`eventually` windows run through an amortized O(1)
/// sliding-window extremum; the result equals a direct per-sample evaluation
/// exactly.
pub fn monitor(formula: &Formula, trace: &Trace) -> Result<Verdict, EvalError> {
    let ctx = EvalCtx::build(formula, trace)?;
    let depth = formula.temporal_depth();
    let n_out = ctx.valid_len(depth);
    if n_out == 0 {
        let (t0, t1) = trace.time_domain();
        return Err(EvalError::EmptyHorizon {
            required: depth,
            available: t1 - t0,
        });
    }
    let rho = ctx.eval(formula);
    debug_assert_eq!(rho.len(), n_out);
    let times = &ctx.grid[..n_out];
    let robustness = Signal::new(
        times
            .iter()
            .zip(&rho)
            .map(|(&t, &v)| crate::signal::Sample::new(t, v))
            .collect(),
        Interpolation::Linear,
        "robustness",
    )?;
    let satisfaction = Signal::new(
        times
            .iter()
            .zip(&rho)
            .map(|(&t, &v)| crate::signal::Sample::new(t, if v > 0.0 { 1.0 } else { -1.0 }))
            .collect(),
        Interpolation::Step,
        "satisfaction",
    )?;
    Ok(Verdict {
        vehicle_id: trace.vehicle_id().to_string(),
        summary: rho[0],
        horizon: (times[0], times[n_out - 1]),
        robustness,
        satisfaction,
    })
}

/// Robustness of `formula` on `trace` at a single time `t`.
///
/// Reference semantics evaluated recursively from the definitions; useful for
/// spot checks and cross-validation of [`monitor`], which must agree with it
/// at every sample time. `t` must lie within the formula's horizon.
pub fn robustness(formula: &Formula, trace: &Trace, t: f64) -> Result<f64, EvalError> {
    let ctx = EvalCtx::build(formula, trace)?;
    let depth = formula.temporal_depth();
    let start = ctx.grid[0];
    let end = ctx.t_end - depth;
    if !(t >= start - TIME_EPS && t <= end + TIME_EPS) {
        return Err(EvalError::OutsideHorizon { t, start, end });
    }
    Ok(rob_at(formula, &ctx, trace, t))
}

fn rob_at(formula: &Formula, ctx: &EvalCtx, trace: &Trace, t: f64) -> f64 {
    match formula {
        Formula::Atom(pred) => {
            if let Some(mask) = &pred.mask {
                let guard = trace
                    .channel(&mask.channel)
                    .expect("channels validated")
                    .value_at(t)
                    .expect("t within domain");
                if mask.comparison.margin(guard, mask.threshold) > 0.0 {
                    return f64::INFINITY;
                }
            }
            let value = trace
                .channel(&pred.channel)
                .expect("channels validated")
                .value_at(t)
                .expect("t within domain");
            pred.comparison.margin(value, pred.threshold)
        }
        Formula::Not(f) => -rob_at(f, ctx, trace, t),
        Formula::And(l, r) => rob_at(l, ctx, trace, t).min(rob_at(r, ctx, trace, t)),
        Formula::Or(l, r) => rob_at(l, ctx, trace, t).max(rob_at(r, ctx, trace, t)),
        Formula::Implies(l, r) => (-rob_at(l, ctx, trace, t)).max(rob_at(r, ctx, trace, t)),
        Formula::Always(iv, f) => {
            let mut acc = f64::INFINITY;
            for t2 in window_times(ctx, iv, f.temporal_depth(), t) {
                acc = acc.min(rob_at(f, ctx, trace, t2));
            }
            acc
        }
        Formula::Eventually(iv, f) => {
            let mut acc = f64::NEG_INFINITY;
            for t2 in window_times(ctx, iv, f.temporal_depth(), t) {
                acc = acc.max(rob_at(f, ctx, trace, t2));
            }
            acc
        }
        Formula::Until(iv, l, r) => {
            let child_depth = l.temporal_depth().max(r.temporal_depth());
            let hi_t = match iv.end() {
                IntervalEnd::At(b) => t + b + TIME_EPS,
                IntervalEnd::TraceEnd => ctx.t_end - child_depth + TIME_EPS,
            };
            let lo_t = t + iv.start() - TIME_EPS;
            let mut prefix = f64::INFINITY;
            let mut acc = f64::NEG_INFINITY;
            for &tk in ctx
                .grid
                .iter()
                .filter(|&&tk| tk >= t - TIME_EPS && tk <= hi_t)
            {
                prefix = prefix.min(rob_at(l, ctx, trace, tk));
                if tk >= lo_t {
                    acc = acc.max(rob_at(r, ctx, trace, tk).min(prefix));
                }
            }
            acc
        }
    }
}

fn window_times(ctx: &EvalCtx, iv: &Interval, child_depth: f64, t: f64) -> Vec<f64> {
    let lo = t + iv.start() - TIME_EPS;
    let hi = match iv.end() {
        IntervalEnd::At(b) => t + b + TIME_EPS,
        IntervalEnd::TraceEnd => ctx.t_end - child_depth + TIME_EPS,
    };
    ctx.grid
        .iter()
        .copied()
        .filter(|&g| g >= lo && g <= hi)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::ast::Comparison;
    use crate::stl::parse::parse;
    use crate::trace::uniform_trace;

    fn const_speed_trace(value: f64, n: usize, dt: f64) -> Trace {
        let speeds: Vec<f64> = vec![value; n];
        uniform_trace("v1", dt, &[("speed", Interpolation::Linear, &speeds)]).unwrap()
    }

    #[test]
    fn atom_margin_is_threshold_distance() {
        let trace = const_speed_trace(30.0, 5, 1.0);
        let verdict = monitor(&parse("speed <= 31").unwrap(), &trace).unwrap();
        assert!(verdict.robustness.values().all(|v| v == 1.0));
        assert!(verdict.satisfaction.values().all(|v| v == 1.0));
    }

    #[test]
    fn negation_flips_sign() {
        let trace = const_speed_trace(30.0, 5, 1.0);
        let verdict = monitor(&parse("not speed <= 31").unwrap(), &trace).unwrap();
        assert!(verdict.robustness.values().all(|v| v == -1.0));
    }

    #[test]
    fn bounded_always_takes_window_minimum() {
        let trace =
            uniform_trace("v1", 1.0, &[("v", Interpolation::Step, &[5.0, -1.0, 3.0])]).unwrap();
        let verdict = monitor(&parse("always[0,2] v >= 0").unwrap(), &trace).unwrap();
        assert_eq!(verdict.summary, -1.0);
        assert_eq!(verdict.horizon, (0.0, 0.0));
    }

    #[test]
    fn unbounded_always_summary_on_slow_trace() {
        let trace = const_speed_trace(19.27, 2001, 0.05);
        let verdict = monitor(&parse("always speed >= 22.5").unwrap(), &trace).unwrap();
        assert!((verdict.summary - (19.27 - 22.5)).abs() < 1e-9);
        assert!(verdict.satisfaction.values().all(|v| v == -1.0));
        // unbounded always is defined on the whole trace
        assert_eq!(verdict.horizon, (0.0, 100.0));
    }

    #[test]
    fn eventually_detects_recovery() {
        let speeds: Vec<f64> = (0..=60).map(|i| 19.0 + 0.1 * i as f64).collect();
        let trace = uniform_trace("v1", 1.0, &[("speed", Interpolation::Linear, &speeds)]).unwrap();
        let verdict = monitor(&parse("eventually speed >= 22.5").unwrap(), &trace).unwrap();
        assert!(verdict.summary > 0.0);
    }

    #[test]
    fn zero_robustness_counts_as_violation() {
        let trace = const_speed_trace(5.0, 3, 1.0);
        let verdict = monitor(&parse("speed >= 5").unwrap(), &trace).unwrap();
        assert_eq!(verdict.summary, 0.0);
        assert!(!verdict.satisfied());
        assert!(verdict.satisfaction.values().all(|v| v == -1.0));
    }

    #[test]
    fn masked_atom_is_vacuously_true() {
        let headways = vec![-1.0; 10];
        let trace =
            uniform_trace("v1", 1.0, &[("headway", Interpolation::Step, &headways)]).unwrap();
        let formula = Formula::Atom(Predicate::new("headway", Comparison::Ge, 4.0).with_mask(
            "headway",
            Comparison::Lt,
            0.0,
        ));
        let verdict = monitor(&formula, &trace).unwrap();
        assert_eq!(verdict.summary, f64::INFINITY);
        assert!(verdict.satisfied());
    }

    #[test]
    fn missing_channel_is_reported() {
        let trace = const_speed_trace(10.0, 5, 1.0);
        match monitor(&parse("headway >= 4").unwrap(), &trace) {
            Err(EvalError::MissingChannel { channel, .. }) => assert_eq!(channel, "headway"),
            other => panic!("expected missing channel, got {other:?}"),
        }
    }

    #[test]
    fn horizon_error_states_required_duration() {
        let trace = const_speed_trace(10.0, 3, 1.0); // 2 seconds long
        match monitor(&parse("always[0,5] speed >= 0").unwrap(), &trace) {
            Err(EvalError::EmptyHorizon {
                required,
                available,
            }) => {
                assert_eq!(required, 5.0);
                assert_eq!(available, 2.0);
            }
            other => panic!("expected horizon error, got {other:?}"),
        }
    }

    #[test]
    fn nested_window_horizon_shrinks_by_total_depth() {
        let trace = const_speed_trace(10.0, 11, 1.0); // 10 seconds
        let verdict = monitor(
            &parse("always[0,3] eventually[0,2] speed >= 0").unwrap(),
            &trace,
        )
        .unwrap();
        assert_eq!(verdict.horizon, (0.0, 5.0));
    }

    #[test]
    fn until_with_degenerate_interval_is_min_of_operands() {
        let trace = uniform_trace(
            "v1",
            1.0,
            &[
                ("a", Interpolation::Step, &[3.0, 1.0, 7.0]),
                ("b", Interpolation::Step, &[5.0, -2.0, 4.0]),
            ],
        )
        .unwrap();
        let verdict = monitor(&parse("(a > 0 until[0,0] b > 0)").unwrap(), &trace).unwrap();
        let expected = [3.0f64.min(5.0), 1.0f64.min(-2.0), 7.0f64.min(4.0)];
        let got: Vec<f64> = verdict.robustness.values().collect();
        assert_eq!(got, expected.to_vec());
    }

    #[test]
    fn until_requires_eventual_target() {
        // speed stays above the limit forever: the until never realizes
        let trace = const_speed_trace(30.0, 50, 1.0);
        let verdict = monitor(
            &parse("((speed > 0) until[0,end] speed <= 18)").unwrap(),
            &trace,
        )
        .unwrap();
        assert!(verdict.summary < 0.0);
    }

    #[test]
    fn until_delayed_lower_bound_matches_reference() {
        let trace = uniform_trace(
            "v1",
            1.0,
            &[
                ("a", Interpolation::Step, &[5.0, 4.0, 3.0, 2.0, 6.0, 7.0]),
                ("b", Interpolation::Step, &[-3.0, -1.0, 2.0, 8.0, -2.0, 1.0]),
            ],
        )
        .unwrap();
        let formula = parse("(a > 0 until[2,end] b > 0)").unwrap();
        let verdict = monitor(&formula, &trace).unwrap();
        for (i, t) in verdict.robustness.times().enumerate() {
            let reference = robustness(&formula, &trace, t).unwrap();
            let fast = verdict.robustness.samples()[i].value;
            assert_eq!(fast, reference, "mismatch at t={t}");
        }
    }

    #[test]
    fn monitor_agrees_with_pointwise_reference() {
        let speeds: Vec<f64> = (0..40)
            .map(|i| 25.0 + 8.0 * ((i as f64) * 0.7).sin())
            .collect();
        let trace = uniform_trace("v1", 0.5, &[("speed", Interpolation::Linear, &speeds)]).unwrap();
        let formula =
            parse("always[0,4] (speed <= 31 or (speed > 31 => eventually[0,2] speed <= 31))")
                .unwrap();
        let verdict = monitor(&formula, &trace).unwrap();
        for sample in verdict.robustness.samples() {
            let reference = robustness(&formula, &trace, sample.t).unwrap();
            assert_eq!(sample.value, reference, "mismatch at t={}", sample.t);
        }
    }

    #[test]
    fn robustness_outside_horizon_is_an_error() {
        let trace = const_speed_trace(10.0, 11, 1.0);
        let formula = parse("always[0,4] speed >= 0").unwrap();
        assert!(robustness(&formula, &trace, 6.0).is_ok());
        assert!(matches!(
            robustness(&formula, &trace, 7.0),
            Err(EvalError::OutsideHorizon { .. })
        ));
    }

    #[test]
    fn channels_with_different_grids_are_merged() {
        let mut channels = std::collections::BTreeMap::new();
        channels.insert(
            "a".to_string(),
            Signal::from_pairs([(0.0, 1.0), (2.0, 3.0)], Interpolation::Linear, "").unwrap(),
        );
        channels.insert(
            "b".to_string(),
            Signal::from_pairs(
                [(0.0, 5.0), (1.0, -1.0), (2.0, 5.0)],
                Interpolation::Step,
                "",
            )
            .unwrap(),
        );
        let trace = Trace::new("v1", channels).unwrap();
        let verdict = monitor(&parse("(a >= 0 and b >= 0)").unwrap(), &trace).unwrap();
        // grid is {0,1,2}; 'a' interpolates to 2.0 at t=1 where 'b' dips
        let got: Vec<f64> = verdict.robustness.values().collect();
        assert_eq!(got, vec![1.0, -1.0, 3.0]);
    }
}
