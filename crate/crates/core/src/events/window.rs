use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open interval `[start, end)` in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Span {
    pub start: f64,
    pub end: f64,
}

impl Span {
    pub fn new(start: f64, end: f64) -> Self {
        Span { start, end }
    }

    pub fn len(&self) -> f64 {
        (self.end - self.start).max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.end > self.start)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t < self.end
    }
}

impl From<(f64, f64)> for Span {
    fn from((start, end): (f64, f64)) -> Self {
        Span { start, end }
    }
}

impl From<Span> for (f64, f64) {
    fn from(s: Span) -> Self {
        (s.start, s.end)
    }
}

/// The set of times on which a dyad's interactions could have been recorded.
///
/// Spans are sorted, pairwise disjoint, non-abutting, and non-empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Span>", into = "Vec<Span>")]
pub struct ObservationWindow {
    spans: Vec<Span>,
}

impl TryFrom<Vec<Span>> for ObservationWindow {
    type Error = Error;

    fn try_from(spans: Vec<Span>) -> Result<Self> {
        ObservationWindow::new(spans)
    }
}

impl From<ObservationWindow> for Vec<Span> {
    fn from(w: ObservationWindow) -> Self {
        w.spans
    }
}

impl ObservationWindow {
    /// Validating constructor: spans must already be sorted, disjoint and non-empty.
    pub fn new(spans: Vec<Span>) -> Result<Self> {
        for s in &spans {
            if !(s.start.is_finite() && s.end.is_finite()) || !(s.start < s.end) {
                return Err(Error::config(format!(
                    "window span [{}, {}) is not a finite non-empty interval",
                    s.start, s.end
                )));
            }
        }
        for pair in spans.windows(2) {
            if !(pair[0].end < pair[1].start) {
                return Err(Error::config(format!(
                    "window spans [{}, {}) and [{}, {}) are unsorted or touch",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        Ok(ObservationWindow { spans })
    }

    /// Normalizing constructor: drops empty spans, sorts, and unions overlaps.
    pub fn from_spans(spans: impl IntoIterator<Item = Span>) -> Self {
        let mut spans: Vec<Span> = spans.into_iter().filter(|s| !s.is_empty()).collect();
        spans.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.end.total_cmp(&b.end)));
        let mut out: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            match out.last_mut() {
                Some(last) if s.start <= last.end => last.end = last.end.max(s.end),
                _ => out.push(s),
            }
        }
        ObservationWindow { spans: out }
    }

    pub fn single(start: f64, end: f64) -> Self {
        Self::from_spans([Span::new(start, end)])
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.spans.iter().map(Span::len).sum()
    }

    pub fn start(&self) -> Option<f64> {
        self.spans.first().map(|s| s.start)
    }

    pub fn end(&self) -> Option<f64> {
        self.spans.last().map(|s| s.end)
    }

    /// Half-open membership.
    pub fn contains(&self, t: f64) -> bool {
        let idx = self.spans.partition_point(|s| s.end <= t);
        self.spans.get(idx).is_some_and(|s| s.contains(t))
    }

    /// Membership in the closure of some span.
    ///
    /// Event times sit at the left edge of the duration removed for them, which
    /// is the right end of the preceding span, so events are checked with this.
    pub fn covers(&self, t: f64) -> bool {
        let idx = self.spans.partition_point(|s| s.end < t);
        self.spans
            .get(idx)
            .is_some_and(|s| s.start <= t && t <= s.end)
    }

    pub fn intersect(&self, other: &ObservationWindow) -> ObservationWindow {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.spans.len() && j < other.spans.len() {
            let a = self.spans[i];
            let b = other.spans[j];
            let lo = a.start.max(b.start);
            let hi = a.end.min(b.end);
            if lo < hi {
                out.push(Span::new(lo, hi));
            }
            if a.end <= b.end {
                i += 1;
            } else {
                j += 1;
            }
        }
        ObservationWindow::from_spans(out)
    }

    /// Removes every (closed) hole from the window.
    pub fn subtract(&self, holes: &[Span]) -> ObservationWindow {
        let holes = ObservationWindow::from_spans(holes.iter().copied());
        let mut out = Vec::new();
        let mut h = 0;
        for s in &self.spans {
            let mut cur = s.start;
            while h < holes.spans.len() && holes.spans[h].end <= cur {
                h += 1;
            }
            let mut k = h;
            while k < holes.spans.len() && holes.spans[k].start < s.end {
                let hole = holes.spans[k];
                if hole.start > cur {
                    out.push(Span::new(cur, hole.start));
                }
                cur = cur.max(hole.end);
                k += 1;
            }
            if cur < s.end {
                out.push(Span::new(cur, s.end));
            }
        }
        ObservationWindow::from_spans(out)
    }

    /// Intersection with `[start, end)`.
    pub fn clip(&self, start: f64, end: f64) -> ObservationWindow {
        let lo = self.spans.partition_point(|s| s.end <= start);
        let mut out = Vec::new();
        for s in &self.spans[lo..] {
            if s.start >= end {
                break;
            }
            let a = s.start.max(start);
            let b = s.end.min(end);
            if a < b {
                out.push(Span::new(a, b));
            }
        }
        ObservationWindow { spans: out }
    }

    pub fn shifted(&self, offset: f64) -> ObservationWindow {
        ObservationWindow::from_spans(
            self.spans
                .iter()
                .map(|s| Span::new(s.start + offset, s.end + offset)),
        )
    }
}
