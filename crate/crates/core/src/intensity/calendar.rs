//! Structural breakpoints: where an intensity changes its functional form.

use serde::{Deserialize, Serialize};

use crate::events::Span;

/// Opaque label of a structural segment. Equal keys mean equal rate forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegmentKey(pub u32);

impl SegmentKey {
    /// Outside every modeled period: the intensity is zero there.
    pub const OUTSIDE: SegmentKey = SegmentKey(u32::MAX);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub key: SegmentKey,
}

/// Breakpoints repeating with a fixed period.
///
/// `points` lie in `[0, period)`, sorted; segment `k` is
/// `[points[k], points[k+1])` and the last one wraps around.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicBreaks {
    pub period: f64,
    /// Added to `t` before folding (a UTC offset, for instance).
    pub shift: f64,
    pub points: Vec<f64>,
}

impl PeriodicBreaks {
    #[inline]
    fn fold(&self, t: f64) -> f64 {
        (t + self.shift).rem_euclid(self.period)
    }

    pub fn index_at(&self, t: f64) -> usize {
        let local = self.fold(t);
        let n = self.points.partition_point(|&p| p <= local);
        if n == 0 {
            self.points.len() - 1
        } else {
            n - 1
        }
    }

    /// Smallest breakpoint strictly after `t`.
    pub fn next_after(&self, t: f64) -> f64 {
        let base = t - self.fold(t);
        for cycle in 0..3 {
            let offset = base + cycle as f64 * self.period;
            for &p in &self.points {
                let cand = offset + p;
                if cand > t {
                    return cand;
                }
            }
        }
        f64::INFINITY
    }
}

/// Sorted, non-periodic breakpoints.
pub fn next_sorted_after(points: &[f64], t: f64) -> f64 {
    let idx = points.partition_point(|&p| p <= t);
    points.get(idx).copied().unwrap_or(f64::INFINITY)
}

/// Index of the span containing `t`, if any.
pub fn span_index(spans: &[Span], t: f64) -> Option<usize> {
    let idx = spans.partition_point(|s| s.end <= t);
    spans.get(idx).filter(|s| s.contains(t)).map(|_| idx)
}

/// Span boundaries flattened and sorted.
pub fn span_breaks(spans: &[Span]) -> Vec<f64> {
    let mut pts: Vec<f64> = spans.iter().flat_map(|s| [s.start, s.end]).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Splits `[a, b)` into structural segments using `next_break` and `key_at`.
pub fn split(
    a: f64,
    b: f64,
    next_break: impl Fn(f64) -> f64,
    key_at: impl Fn(f64) -> SegmentKey,
    out: &mut Vec<Segment>,
) {
    let mut cur = a;
    while cur < b {
        let mut next = next_break(cur).min(b);
        if !(next > cur) {
            next = b;
        }
        let key = key_at(0.5 * (cur + next));
        match out.last_mut() {
            Some(last) if last.end == cur && last.key == key => last.end = next,
            _ => out.push(Segment {
                start: cur,
                end: next,
                key,
            }),
        }
        cur = next;
    }
}
