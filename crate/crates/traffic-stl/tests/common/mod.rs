// Each integration test binary compiles this module and uses a subset of it.
#![allow(dead_code)]

//! Shared test support: an independent brute-force robustness oracle and
//! random formula/trace generators.
//!
//! The oracle re-implements the semantics from the definitions with plain
//! per-anchor window scans (O(n * window) per node) and shares no evaluation
//! code with the monitor it checks. It mirrors the documented conventions:
//! closed windows with 1e-9 time tolerance, inf/sup over the empty set, and
//! per-node horizons (an `[a,end]` operator adds `a` to the temporal depth
//! and ranges to its child's horizon).

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use traffic_stl::signal::{Interpolation, Signal};
use traffic_stl::stl::{Comparison, Formula, Interval, IntervalEnd, Predicate};
use traffic_stl::trace::Trace;

const EPS: f64 = 1e-9;

/// Temporal depth from the horizon law, computed independently of the
/// implementation.
pub fn oracle_depth(formula: &Formula) -> f64 {
    match formula {
        Formula::Atom(_) => 0.0,
        Formula::Not(f) => oracle_depth(f),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
            oracle_depth(l).max(oracle_depth(r))
        }
        Formula::Always(iv, f) | Formula::Eventually(iv, f) => interval_depth(iv) + oracle_depth(f),
        Formula::Until(iv, l, r) => interval_depth(iv) + oracle_depth(l).max(oracle_depth(r)),
    }
}

fn interval_depth(iv: &Interval) -> f64 {
    match iv.end() {
        IntervalEnd::At(b) => b,
        IntervalEnd::TraceEnd => iv.start(),
    }
}

struct OracleCtx<'a> {
    grid: Vec<f64>,
    trace: &'a Trace,
    t_end: f64,
}

impl OracleCtx<'_> {
    fn cutoff_len(&self, depth: f64) -> usize {
        let cutoff = self.t_end - depth + EPS;
        self.grid.iter().take_while(|&&t| t <= cutoff).count()
    }

    fn atom(&self, pred: &Predicate, t: f64) -> f64 {
        if let Some(mask) = &pred.mask {
            let guard = self
                .trace
                .channel(&mask.channel)
                .expect("oracle trace carries all channels")
                .value_at(t)
                .expect("t within domain");
            if mask.comparison.margin(guard, mask.threshold) > 0.0 {
                return f64::INFINITY;
            }
        }
        let value = self
            .trace
            .channel(&pred.channel)
            .expect("oracle trace carries all channels")
            .value_at(t)
            .expect("t within domain");
        pred.comparison.margin(value, pred.threshold)
    }

    fn eval(&self, formula: &Formula) -> Vec<f64> {
        match formula {
            Formula::Atom(pred) => self.grid.iter().map(|&t| self.atom(pred, t)).collect(),
            Formula::Not(f) => self.eval(f).into_iter().map(|v| -v).collect(),
            Formula::And(l, r) => {
                let (lv, rv) = (self.eval(l), self.eval(r));
                lv.into_iter().zip(rv).map(|(a, b)| a.min(b)).collect()
            }
            Formula::Or(l, r) => {
                let (lv, rv) = (self.eval(l), self.eval(r));
                lv.into_iter().zip(rv).map(|(a, b)| a.max(b)).collect()
            }
            Formula::Implies(l, r) => {
                let (lv, rv) = (self.eval(l), self.eval(r));
                lv.into_iter().zip(rv).map(|(a, b)| (-a).max(b)).collect()
            }
            Formula::Always(iv, f) => {
                let child = self.eval(f);
                let child_len = self.cutoff_len(oracle_depth(f));
                let n = self.cutoff_len(interval_depth(iv) + oracle_depth(f));
                (0..n)
                    .map(|i| {
                        let (lo, hi) = self.window(iv, self.grid[i], child_len);
                        let mut acc = f64::INFINITY;
                        for (j, &value) in child.iter().enumerate().take(child_len) {
                            if self.grid[j] >= lo && self.grid[j] <= hi {
                                acc = acc.min(value);
                            }
                        }
                        acc
                    })
                    .collect()
            }
            Formula::Eventually(iv, f) => {
                let child = self.eval(f);
                let child_len = self.cutoff_len(oracle_depth(f));
                let n = self.cutoff_len(interval_depth(iv) + oracle_depth(f));
                (0..n)
                    .map(|i| {
                        let (lo, hi) = self.window(iv, self.grid[i], child_len);
                        let mut acc = f64::NEG_INFINITY;
                        for (j, &value) in child.iter().enumerate().take(child_len) {
                            if self.grid[j] >= lo && self.grid[j] <= hi {
                                acc = acc.max(value);
                            }
                        }
                        acc
                    })
                    .collect()
            }
            Formula::Until(iv, l, r) => {
                let lv = self.eval(l);
                let rv = self.eval(r);
                let child_depth = oracle_depth(l).max(oracle_depth(r));
                let child_len = self.cutoff_len(child_depth);
                let n = self.cutoff_len(interval_depth(iv) + child_depth);
                (0..n)
                    .map(|i| {
                        let (lo, hi) = self.window(iv, self.grid[i], child_len);
                        let mut acc = f64::NEG_INFINITY;
                        let mut prefix = f64::INFINITY;
                        for j in 0..child_len {
                            if self.grid[j] < self.grid[i] - EPS {
                                continue;
                            }
                            if self.grid[j] > hi {
                                break;
                            }
                            prefix = prefix.min(lv[j]);
                            if self.grid[j] >= lo {
                                acc = acc.max(rv[j].min(prefix));
                            }
                        }
                        acc
                    })
                    .collect()
            }
        }
    }

    /// Closed window `[lo, hi]` (with tolerance applied) for an anchor time.
    fn window(&self, iv: &Interval, t: f64, child_len: usize) -> (f64, f64) {
        let lo = t + iv.start() - EPS;
        let hi = match iv.end() {
            IntervalEnd::At(b) => t + b + EPS,
            IntervalEnd::TraceEnd => {
                if child_len == 0 {
                    f64::NEG_INFINITY
                } else {
                    self.grid[child_len - 1] + EPS
                }
            }
        };
        (lo, hi)
    }
}

/// Brute-force robustness over the formula's horizon, as `(t, rho)` pairs.
pub fn brute_force_monitor(formula: &Formula, trace: &Trace) -> Vec<(f64, f64)> {
    let (t0, t_end) = trace.time_domain();
    let mut grid: Vec<f64> = Vec::new();
    for name in formula.channels() {
        let signal = trace
            .channel(name)
            .expect("oracle trace carries all channels");
        grid.extend(signal.times().filter(|&t| t >= t0 && t <= t_end));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let ctx = OracleCtx { grid, trace, t_end };
    let values = ctx.eval(formula);
    let n = ctx.cutoff_len(oracle_depth(formula));
    ctx.grid[..n]
        .iter()
        .copied()
        .zip(values.into_iter().take(n))
        .collect()
}

pub const GEN_CHANNELS: [&str; 3] = ["u", "v", "w"];

/// Random formula with syntactic nesting depth at most `depth`; intervals
/// start within 10 s and span at most 20 s (20 samples on the generated
/// 1 s grids).
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    let kind = if depth == 0 {
        0
    } else {
        rng.random_range(0..10u32)
    };
    match kind {
        0..=2 => {
            let channel = GEN_CHANNELS[rng.random_range(0..GEN_CHANNELS.len())];
            let comparison = match rng.random_range(0..4u32) {
                0 => Comparison::Gt,
                1 => Comparison::Ge,
                2 => Comparison::Lt,
                _ => Comparison::Le,
            };
            let threshold = (rng.random_range(-20..=20) as f64) * 0.5;
            Formula::atom(channel, comparison, threshold)
        }
        3 => Formula::not_(random_formula(rng, depth - 1)),
        4 => Formula::and(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        5 => Formula::or(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        6 => Formula::implies(
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
        7 | 8 => {
            let iv = random_interval(rng);
            let body = random_formula(rng, depth - 1);
            if kind == 7 {
                Formula::always(iv, body)
            } else {
                Formula::eventually(iv, body)
            }
        }
        _ => Formula::until(
            random_interval(rng),
            random_formula(rng, depth - 1),
            random_formula(rng, depth - 1),
        ),
    }
}

pub fn random_interval(rng: &mut ChaCha8Rng) -> Interval {
    let a = rng.random_range(0..=10u32) as f64;
    if rng.random_range(0..4u32) == 0 {
        Interval::unbounded_from(a).unwrap()
    } else {
        let width = rng.random_range(0..=20u32) as f64;
        Interval::bounded(a, a + width).unwrap()
    }
}

/// Random formula that is monotone in every generator channel: only `>` /
/// `>=` atoms combined with and/or/always/eventually/until (no negation or
/// implication), so raising any sample can never lower the robustness.
pub fn random_monotone_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    let kind = if depth == 0 {
        0
    } else {
        rng.random_range(0..8u32)
    };
    match kind {
        0..=2 => {
            let channel = GEN_CHANNELS[rng.random_range(0..GEN_CHANNELS.len())];
            let comparison = if rng.random_range(0..2u32) == 0 {
                Comparison::Gt
            } else {
                Comparison::Ge
            };
            let threshold = (rng.random_range(-20..=20) as f64) * 0.5;
            Formula::atom(channel, comparison, threshold)
        }
        3 => Formula::and(
            random_monotone_formula(rng, depth - 1),
            random_monotone_formula(rng, depth - 1),
        ),
        4 => Formula::or(
            random_monotone_formula(rng, depth - 1),
            random_monotone_formula(rng, depth - 1),
        ),
        5 => Formula::always(
            random_interval(rng),
            random_monotone_formula(rng, depth - 1),
        ),
        6 => Formula::eventually(
            random_interval(rng),
            random_monotone_formula(rng, depth - 1),
        ),
        _ => Formula::until(
            random_interval(rng),
            random_monotone_formula(rng, depth - 1),
            random_monotone_formula(rng, depth - 1),
        ),
    }
}

/// Random piecewise-constant trace on a uniform 1 s grid carrying all
/// generator channels, long enough to give `formula` a non-empty horizon and
/// at most 200 samples.
pub fn random_trace(rng: &mut ChaCha8Rng, formula: &Formula) -> Trace {
    let min_len = (oracle_depth(formula).ceil() as usize + 2).min(200);
    let n = rng.random_range(min_len..=200);
    let mut channels = BTreeMap::new();
    for name in GEN_CHANNELS {
        let pairs = (0..n).map(|i| (i as f64, rng.random_range(-10.0..10.0)));
        channels.insert(
            name.to_string(),
            Signal::from_pairs(pairs, Interpolation::Step, "").unwrap(),
        );
    }
    Trace::new("gen", channels).unwrap()
}

/// Random formula whose atoms carry vacuity masks (guard: same channel below
/// a random negative-ish threshold), mirroring the leaderless-headway
/// convention.
pub fn random_masked_formula(rng: &mut ChaCha8Rng, depth: usize) -> Formula {
    let raw = random_formula(rng, depth);
    mask_atoms(raw, rng)
}

fn mask_atoms(formula: Formula, rng: &mut ChaCha8Rng) -> Formula {
    match formula {
        Formula::Atom(pred) => {
            if rng.random_range(0..2u32) == 0 {
                let threshold = rng.random_range(-6.0..0.0);
                Formula::Atom(
                    Predicate::new(pred.channel.clone(), pred.comparison, pred.threshold)
                        .with_mask(pred.channel, Comparison::Lt, threshold),
                )
            } else {
                Formula::Atom(pred)
            }
        }
        Formula::Not(f) => Formula::not_(mask_atoms(*f, rng)),
        Formula::And(l, r) => Formula::and(mask_atoms(*l, rng), mask_atoms(*r, rng)),
        Formula::Or(l, r) => Formula::or(mask_atoms(*l, rng), mask_atoms(*r, rng)),
        Formula::Implies(l, r) => Formula::implies(mask_atoms(*l, rng), mask_atoms(*r, rng)),
        Formula::Always(iv, f) => Formula::always(iv, mask_atoms(*f, rng)),
        Formula::Eventually(iv, f) => Formula::eventually(iv, mask_atoms(*f, rng)),
        Formula::Until(iv, l, r) => Formula::until(iv, mask_atoms(*l, rng), mask_atoms(*r, rng)),
    }
}

/// Random trace where every channel has its own irregular sample grid
/// (random positive increments), stressing the union-grid evaluation and
/// inter-sample interpolation. Channels mix step and linear interpolation.
pub fn random_irregular_trace(rng: &mut ChaCha8Rng, formula: &Formula) -> Trace {
    let needed = oracle_depth(formula) + 2.0;
    let mut channels = BTreeMap::new();
    for name in GEN_CHANNELS {
        let mut t = rng.random_range(0.0..0.5);
        let mut pairs = Vec::new();
        let span = needed + rng.random_range(20.0..60.0);
        while t < span {
            pairs.push((t, rng.random_range(-10.0..10.0)));
            t += rng.random_range(0.05..1.5);
        }
        let mode = if rng.random_range(0..2u32) == 0 {
            Interpolation::Step
        } else {
            Interpolation::Linear
        };
        channels.insert(
            name.to_string(),
            Signal::from_pairs(pairs, mode, "").unwrap(),
        );
    }
    Trace::new("gen", channels).unwrap()
}
