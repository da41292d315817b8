//! Formula abstract syntax: predicates over named channels combined with
//! boolean connectives and bounded future-time temporal operators.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Comparison operator of an atomic predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Gt,
    Ge,
    Lt,
    Le,
}

impl Comparison {
    /// Signed robustness margin of `value <cmp> threshold`.
    ///
    /// Positive iff the comparison holds strictly: `x > c` and `x >= c` both
    /// yield `x - c`, the `<` forms yield `c - x`. A margin of exactly zero is
    /// classified as violating.
    pub fn margin(self, value: f64, threshold: f64) -> f64 {
        match self {
            Comparison::Gt | Comparison::Ge => value - threshold,
            Comparison::Lt | Comparison::Le => threshold - value,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparison::Gt => ">",
            Comparison::Ge => ">=",
            Comparison::Lt => "<",
            Comparison::Le => "<=",
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Guard that makes a predicate vacuously true.
///
/// Used for "no leader" periods: a headway atom masked with `headway < 0`
/// evaluates to +inf robustness whenever the mask condition holds strictly.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub channel: String,
    pub comparison: Comparison,
    pub threshold: f64,
}

/// Atomic predicate `channel <cmp> threshold` with an optional vacuity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub channel: String,
    pub comparison: Comparison,
    pub threshold: f64,
    pub mask: Option<Mask>,
}

impl Predicate {
    pub fn new(channel: impl Into<String>, comparison: Comparison, threshold: f64) -> Self {
        Predicate {
            channel: channel.into(),
            comparison,
            threshold,
            mask: None,
        }
    }

    pub fn with_mask(
        mut self,
        channel: impl Into<String>,
        comparison: Comparison,
        threshold: f64,
    ) -> Self {
        self.mask = Some(Mask {
            channel: channel.into(),
            comparison,
            threshold,
        });
        self
    }
}

/// Upper end of a temporal interval: a finite offset or the end of the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalEnd {
    At(f64),
    TraceEnd,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum IntervalError {
    #[error("interval bounds must be finite, non-negative and ordered: [{start}, {end}]")]
    Invalid { start: f64, end: f64 },
}

/// Closed temporal interval `[start, end]` with `0 <= start <= end`;
/// the end may be the distinguished end-of-trace bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    start: f64,
    end: IntervalEnd,
}

impl Interval {
    pub fn bounded(start: f64, end: f64) -> Result<Self, IntervalError> {
        if !(start.is_finite() && end.is_finite() && start >= 0.0 && start <= end) {
            return Err(IntervalError::Invalid { start, end });
        }
        Ok(Interval {
            start,
            end: IntervalEnd::At(end),
        })
    }

    pub fn unbounded_from(start: f64) -> Result<Self, IntervalError> {
        if !(start.is_finite() && start >= 0.0) {
            return Err(IntervalError::Invalid {
                start,
                end: f64::INFINITY,
            });
        }
        Ok(Interval {
            start,
            end: IntervalEnd::TraceEnd,
        })
    }

    /// `[0, end-of-trace]`, the default when no interval is written.
    pub fn full() -> Self {
        Interval {
            start: 0.0,
            end: IntervalEnd::TraceEnd,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> IntervalEnd {
        self.end
    }

    /// Contribution of this interval to the temporal depth of a formula: the
    /// upper bound when finite, otherwise the lower bound (an end-of-trace
    /// window only needs the trace to reach `t + start`).
    pub fn depth(&self) -> f64 {
        match self.end {
            IntervalEnd::At(b) => b,
            IntervalEnd::TraceEnd => self.start,
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.end {
            IntervalEnd::At(b) => write!(f, "[{},{}]", self.start, b),
            IntervalEnd::TraceEnd => write!(f, "[{},end]", self.start),
        }
    }
}

/// STL formula over named signal predicates.
///
/// `Implies` is stored explicitly and evaluated as `not lhs or rhs`.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Atom(Predicate),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Always(Interval, Box<Formula>),
    Eventually(Interval, Box<Formula>),
    Until(Interval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(channel: impl Into<String>, comparison: Comparison, threshold: f64) -> Self {
        Formula::Atom(Predicate::new(channel, comparison, threshold))
    }

    pub fn not_(formula: Formula) -> Self {
        Formula::Not(Box::new(formula))
    }

    pub fn and(lhs: Formula, rhs: Formula) -> Self {
        Formula::And(Box::new(lhs), Box::new(rhs))
    }

    pub fn or(lhs: Formula, rhs: Formula) -> Self {
        Formula::Or(Box::new(lhs), Box::new(rhs))
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Self {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    pub fn always(interval: Interval, body: Formula) -> Self {
        Formula::Always(interval, Box::new(body))
    }

    pub fn eventually(interval: Interval, body: Formula) -> Self {
        Formula::Eventually(interval, Box::new(body))
    }

    pub fn until(interval: Interval, lhs: Formula, rhs: Formula) -> Self {
        Formula::Until(interval, Box::new(lhs), Box::new(rhs))
    }

    /// All channel names referenced by predicates and masks.
    pub fn channels(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        self.collect_channels(&mut out);
        out
    }

    fn collect_channels<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Formula::Atom(p) => {
                out.insert(p.channel.as_str());
                if let Some(mask) = &p.mask {
                    out.insert(mask.channel.as_str());
                }
            }
            Formula::Not(f) => f.collect_channels(out),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.collect_channels(out);
                r.collect_channels(out);
            }
            Formula::Always(_, f) | Formula::Eventually(_, f) => f.collect_channels(out),
            Formula::Until(_, l, r) => {
                l.collect_channels(out);
                r.collect_channels(out);
            }
        }
    }

    /// Temporal depth: how far past an evaluation time the trace must extend
    /// for the formula to be fully defined there. The verdict horizon ends at
    /// `t_end - depth`.
    pub fn temporal_depth(&self) -> f64 {
        match self {
            Formula::Atom(_) => 0.0,
            Formula::Not(f) => f.temporal_depth(),
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Implies(l, r) => {
                l.temporal_depth().max(r.temporal_depth())
            }
            Formula::Always(iv, f) | Formula::Eventually(iv, f) => iv.depth() + f.temporal_depth(),
            Formula::Until(iv, l, r) => iv.depth() + l.temporal_depth().max(r.temporal_depth()),
        }
    }
}

/// Pretty-printer emitting the concrete DSL syntax.
///
/// Binary connectives and `until` are always parenthesized, so the output
/// reparses to a structurally identical formula.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(p) => write!(f, "{} {} {}", p.channel, p.comparison, p.threshold),
            Formula::Not(inner) => write!(f, "not {}", Unary(inner)),
            Formula::And(l, r) => write!(f, "({} and {})", l, r),
            Formula::Or(l, r) => write!(f, "({} or {})", l, r),
            Formula::Implies(l, r) => write!(f, "({} => {})", l, r),
            Formula::Always(iv, body) => write!(f, "always{} {}", iv, Unary(body)),
            Formula::Eventually(iv, body) => write!(f, "eventually{} {}", iv, Unary(body)),
            Formula::Until(iv, l, r) => write!(f, "({} until{} {})", l, iv, r),
        }
    }
}

/// Prints a formula in a position where the grammar expects a unary operand,
/// wrapping the binary forms (already self-parenthesized) as-is and leaving
/// atoms and prefix operators bare.
struct Unary<'a>(&'a Formula);

impl fmt::Display for Unary<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // every non-atom variant either starts with a keyword or prints its
        // own enclosing parentheses, both valid unary productions
        write!(f, "{}", self.0)
    }
}
