//! Actors, dyads, observation windows and cleaned event streams.
//!
//! Raw proximity logs are directed and fragmented. [`symmetrize_and_merge`]
//! pools both directions of a pair and fuses encounters separated by at most
//! a gap threshold; [`build_window`] intersects the two actors' activity and
//! removes encounter durations; [`to_event_stream`] turns what is left into
//! instantaneous event times.

pub mod io;
mod window;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{
    read_activity, read_attributes, read_encounters, write_activity, write_attributes,
    write_encounters,
};
pub use window::{ObservationWindow, Span};

#[derive(
    Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct ActorId(pub u32);

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unordered actor pair stored with `i < j`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct Dyad {
    pub i: ActorId,
    pub j: ActorId,
}

impl Dyad {
    pub fn new(a: ActorId, b: ActorId) -> Option<Dyad> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Dyad { i: a, j: b }),
            std::cmp::Ordering::Greater => Some(Dyad { i: b, j: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub fn contains(&self, a: ActorId) -> bool {
        self.i == a || self.j == a
    }
}

impl fmt::Display for Dyad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Actor {
    pub id: ActorId,
    /// Missing values are simply absent keys.
    pub attributes: BTreeMap<String, String>,
}

impl Actor {
    pub fn new(id: ActorId) -> Self {
        Actor {
            id,
            attributes: BTreeMap::new(),
        }
    }

    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActorTable {
    pub schema: BTreeSet<String>,
    pub actors: BTreeMap<ActorId, Actor>,
}

impl ActorTable {
    pub fn insert_attribute(&mut self, id: ActorId, key: &str, value: &str) {
        self.schema.insert(key.to_string());
        self.actors
            .entry(id)
            .or_insert_with(|| Actor::new(id))
            .attributes
            .insert(key.to_string(), value.to_string());
    }

    pub fn ensure(&mut self, id: ActorId) {
        self.actors.entry(id).or_insert_with(|| Actor::new(id));
    }

    pub fn get(&self, id: ActorId) -> Option<&Actor> {
        self.actors.get(&id)
    }

    pub fn attr(&self, id: ActorId, key: &str) -> Option<&str> {
        self.actors.get(&id).and_then(|a| a.attr(key))
    }

    pub fn len(&self) -> usize {
        self.actors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actors.is_empty()
    }
}

/// One directed proximity record.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEncounter {
    pub source: ActorId,
    pub target: ActorId,
    pub start: f64,
    pub end: f64,
    /// Same-floor probability annotation, when the log carries one.
    pub same_floor_prob: Option<f64>,
}

impl RawEncounter {
    pub fn new(source: u32, target: u32, start: f64, end: f64) -> Self {
        RawEncounter {
            source: ActorId(source),
            target: ActorId(target),
            start,
            end,
            same_floor_prob: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergedEncounter {
    pub dyad: Dyad,
    pub start: f64,
    pub end: f64,
}

/// A record dropped during cleaning and the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub record: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MergeOutcome {
    /// Sorted by dyad, then start.
    pub encounters: Vec<MergedEncounter>,
    pub rejected: Vec<Diagnostic>,
}

/// Pools both directions of every pair and fuses encounters whose gap is at
/// most `gap_threshold` hours. Overlapping and abutting encounters always merge.
pub fn symmetrize_and_merge(
    encounters: &[RawEncounter],
    gap_threshold: f64,
) -> Result<MergeOutcome> {
    if !(gap_threshold >= 0.0) || !gap_threshold.is_finite() {
        return Err(Error::config(format!(
            "gap threshold must be a finite non-negative number of hours, got {gap_threshold}"
        )));
    }
    let mut rejected = Vec::new();
    let mut pooled: BTreeMap<Dyad, Vec<(f64, f64)>> = BTreeMap::new();
    for (idx, e) in encounters.iter().enumerate() {
        if !(e.start.is_finite() && e.end.is_finite()) {
            rejected.push(Diagnostic {
                record: idx,
                reason: "non-finite timestamp".into(),
            });
            continue;
        }
        if e.end < e.start {
            rejected.push(Diagnostic {
                record: idx,
                reason: format!("negative duration: start {} > end {}", e.start, e.end),
            });
            continue;
        }
        let Some(dyad) = Dyad::new(e.source, e.target) else {
            rejected.push(Diagnostic {
                record: idx,
                reason: format!("self-encounter for actor {}", e.source),
            });
            continue;
        };
        pooled.entry(dyad).or_default().push((e.start, e.end));
    }

    let mut merged = Vec::new();
    for (dyad, mut spans) in pooled {
        spans.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut iter = spans.into_iter();
        let (mut start, mut end) = iter.next().expect("pooled entries are non-empty");
        for (s, e) in iter {
            if s - end <= gap_threshold {
                end = end.max(e);
            } else {
                merged.push(MergedEncounter { dyad, start, end });
                start = s;
                end = e;
            }
        }
        merged.push(MergedEncounter { dyad, start, end });
    }
    Ok(MergeOutcome {
        encounters: merged,
        rejected,
    })
}

/// Observation window of a dyad: joint activity minus encounter durations.
///
/// Returns `None` when nothing observable remains; such a dyad is excluded
/// from the likelihood.
pub fn build_window(
    active_i: &ObservationWindow,
    active_j: &ObservationWindow,
    merged: &[MergedEncounter],
) -> Option<ObservationWindow> {
    let joint = active_i.intersect(active_j);
    if joint.is_empty() {
        return None;
    }
    let holes: Vec<Span> = merged.iter().map(|m| Span::new(m.start, m.end)).collect();
    let window = joint.subtract(&holes);
    (window.measure() > 0.0).then_some(window)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    pub dyad: Dyad,
    /// Strictly increasing; each lies in the closure of a window span.
    pub times: Vec<f64>,
    pub window: ObservationWindow,
}

impl EventStream {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Event times for a dyad: the left edge of each encounter's observed part.
///
/// `joint` is the activity intersection the window was cut from. Encounters
/// that never overlap it are dropped; one that starts before the dyad became
/// observable is stamped at the first observable instant. Coincident times
/// collapse to one event.
pub fn to_event_stream(
    dyad: Dyad,
    merged: &[MergedEncounter],
    joint: &ObservationWindow,
    window: ObservationWindow,
) -> EventStream {
    let mut times = Vec::with_capacity(merged.len());
    for m in merged.iter().filter(|m| m.dyad == dyad) {
        let t = if m.end > m.start {
            let clipped = joint.clip(m.start, m.end);
            match (clipped.start(), clipped.end()) {
                (Some(a), _) if window.covers(a) => a,
                (_, Some(b)) => b,
                _ => continue,
            }
        } else if joint.contains(m.start) {
            m.start
        } else {
            continue;
        };
        if window.covers(t) {
            times.push(t);
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    EventStream {
        dyad,
        times,
        window,
    }
}

/// Drops records whose same-floor probability is at or below `threshold`.
pub fn filter_low_confidence(
    encounters: Vec<RawEncounter>,
    threshold: f64,
) -> Result<Vec<RawEncounter>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::config(format!(
            "floor probability threshold {threshold} is outside [0, 1]"
        )));
    }
    Ok(encounters
        .into_iter()
        .filter(|e| e.same_floor_prob.is_none_or(|p| p > threshold))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningConfig {
    /// Largest gap between encounters of a pair that still fuses them.
    pub gap_threshold_hours: f64,
    /// Drop records with same-floor probability at or below this value.
    #[serde(default)]
    pub floor_prob_threshold: Option<f64>,
}

impl Default for CleaningConfig {
    fn default() -> Self {
        CleaningConfig {
            gap_threshold_hours: 0.0,
            floor_prob_threshold: None,
        }
    }
}

impl CleaningConfig {
    /// Thirty-minute merge with the 0.2 same-floor probability filter.
    pub fn mit() -> Self {
        CleaningConfig {
            gap_threshold_hours: 0.5,
            floor_prob_threshold: Some(0.2),
        }
    }

    /// Thirty-second merge, no probability filter.
    pub fn swallow() -> Self {
        CleaningConfig {
            gap_threshold_hours: 30.0 / 3600.0,
            floor_prob_threshold: None,
        }
    }
}

/// Cleaned data ready for modeling.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    pub actors: ActorTable,
    /// Modeled dyads, sorted by dyad.
    pub streams: Vec<EventStream>,
    /// Dyads without any observable time.
    pub unmodeled: Vec<Dyad>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub actor_count: usize,
    pub dyad_count: usize,
    pub event_count: usize,
    pub unmodeled_dyads: usize,
    pub rejected_records: Vec<Diagnostic>,
    pub dropped_low_confidence: usize,
}

impl Dataset {
    pub fn event_count(&self) -> usize {
        self.streams.iter().map(EventStream::len).sum()
    }

    pub fn report(&self) -> IngestReport {
        IngestReport {
            actor_count: self.actors.len(),
            dyad_count: self.streams.len(),
            event_count: self.event_count(),
            unmodeled_dyads: self.unmodeled.len(),
            ..IngestReport::default()
        }
    }

    /// Latest window end over all modeled dyads.
    pub fn horizon(&self) -> Option<(f64, f64)> {
        let lo = self.streams.iter().filter_map(|s| s.window.start()).reduce(f64::min)?;
        let hi = self.streams.iter().filter_map(|s| s.window.end()).reduce(f64::max)?;
        Some((lo, hi))
    }

    /// Applies the cleaning rules and assembles one stream per modeled dyad.
    ///
    /// The actor set is the union of ids seen in the attribute table, the
    /// activity table and the encounter log. Every pair is considered; pairs
    /// without jointly active time are listed as unmodeled.
    pub fn prepare(
        encounters: Vec<RawEncounter>,
        activity: &BTreeMap<ActorId, ObservationWindow>,
        mut actors: ActorTable,
        cleaning: &CleaningConfig,
    ) -> Result<(Dataset, IngestReport)> {
        let before = encounters.len();
        let encounters = match cleaning.floor_prob_threshold {
            Some(thr) => filter_low_confidence(encounters, thr)?,
            None => encounters,
        };
        let dropped_low_confidence = before - encounters.len();
        for e in &encounters {
            actors.ensure(e.source);
            actors.ensure(e.target);
        }
        for id in activity.keys() {
            actors.ensure(*id);
        }
        let outcome = symmetrize_and_merge(&encounters, cleaning.gap_threshold_hours)?;

        let mut by_dyad: BTreeMap<Dyad, Vec<MergedEncounter>> = BTreeMap::new();
        for m in outcome.encounters {
            by_dyad.entry(m.dyad).or_default().push(m);
        }

        let ids: Vec<ActorId> = actors.actors.keys().copied().collect();
        let empty = ObservationWindow::empty();
        let mut streams = Vec::new();
        let mut unmodeled = Vec::new();
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                let dyad = Dyad { i, j };
                let merged = by_dyad.get(&dyad).map(Vec::as_slice).unwrap_or(&[]);
                let act_i = activity.get(&i).unwrap_or(&empty);
                let act_j = activity.get(&j).unwrap_or(&empty);
                match build_window(act_i, act_j, merged) {
                    Some(window) => {
                        let joint = act_i.intersect(act_j);
                        streams.push(to_event_stream(dyad, merged, &joint, window));
                    }
                    None => unmodeled.push(dyad),
                }
            }
        }
        let dataset = Dataset {
            actors,
            streams,
            unmodeled,
        };
        let report = IngestReport {
            rejected_records: outcome.rejected,
            dropped_low_confidence,
            ..dataset.report()
        };
        Ok((dataset, report))
    }
}
