//! Sliding-window extrema over time-stamped series.
//!
//! Monotonic-deque scan: every index enters and leaves the deque once, so a
//! full pass costs amortized O(1) per anchor regardless of window width. Used
//! by the monitor for bounded `always` / `eventually` windows; results must
//! match a direct per-anchor scan exactly.

use std::collections::VecDeque;

/// Absolute tolerance on window-boundary time comparisons. Temporal windows
/// are closed intervals; the tolerance absorbs float drift on accumulated
/// sample grids.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

impl Extremum {
    fn identity(self) -> f64 {
        match self {
            Extremum::Min => f64::INFINITY,
            Extremum::Max => f64::NEG_INFINITY,
        }
    }

    /// True when `incoming` makes `resident` redundant in the deque.
    fn dominates(self, incoming: f64, resident: f64) -> bool {
        match self {
            Extremum::Min => incoming <= resident,
            Extremum::Max => incoming >= resident,
        }
    }
}

/// For each anchor `i` in `0..n_anchors`, the extremum of `values[j]` over all
/// `j` with `times[j]` in the closed window `[times[i]+lo, times[i]+hi]`.
///
/// An empty window yields the extremum's identity (+inf for min, -inf for
/// max). `values` may be shorter than `times`; indices past its end are
/// treated as absent, which is how the evaluator hides samples past a
/// subformula's own horizon.
pub fn sliding_extremum(
    times: &[f64],
    values: &[f64],
    lo: f64,
    hi: f64,
    kind: Extremum,
    n_anchors: usize,
) -> Vec<f64> {
    debug_assert!(lo <= hi);
    debug_assert!(n_anchors <= times.len());
    let limit = values.len();
    let mut out = Vec::with_capacity(n_anchors);
    // deque of indices, values monotone so the front is the window extremum
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for i in 0..n_anchors {
        let lo_t = times[i] + lo - TIME_EPS;
        let hi_t = times[i] + hi + TIME_EPS;
        while next < limit && times[next] <= hi_t {
            if times[next] >= lo_t {
                while let Some(&back) = deque.back() {
                    if kind.dominates(values[next], values[back]) {
                        deque.pop_back();
                    } else {
                        break;
                    }
                }
                deque.push_back(next);
            }
            next += 1;
        }
        while let Some(&front) = deque.front() {
            if times[front] < lo_t {
                deque.pop_front();
            } else {
                break;
            }
        }
        out.push(deque.front().map_or(kind.identity(), |&j| values[j]));
    }
    out
}

/// For each anchor `i` in `0..n_anchors`, the extremum of `values[j]` over all
/// `j` with `times[j] >= times[i] + lo`, up to the end of `values`.
pub fn suffix_extremum(
    times: &[f64],
    values: &[f64],
    lo: f64,
    kind: Extremum,
    n_anchors: usize,
) -> Vec<f64> {
    debug_assert!(n_anchors <= times.len());
    let limit = values.len();
    // suffix[j] = extremum of values[j..]
    let mut suffix = vec![kind.identity(); limit + 1];
    for j in (0..limit).rev() {
        suffix[j] = match kind {
            Extremum::Min => values[j].min(suffix[j + 1]),
            Extremum::Max => values[j].max(suffix[j + 1]),
        };
    }
    let mut out = Vec::with_capacity(n_anchors);
    let mut start = 0usize;
    for i in 0..n_anchors {
        let lo_t = times[i] + lo - TIME_EPS;
        while start < limit && times[start] < lo_t {
            start += 1;
        }
        out.push(suffix[start]);
    }
    out
}
