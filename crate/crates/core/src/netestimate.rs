//! Posterior edge probabilities, snapshots and their export.
//!
//! Midpoints depend on the data alone, so every posterior draw smooths onto
//! the same knots and the Monte Carlo average of interpolated curves is the
//! interpolation of the averaged knot values.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{ActorId, Dataset, Dyad, ObservationWindow};
use crate::intensity::ModelSpec;
use crate::latentpath::{forward_loglik_parts, smooth_parts, DyadKernel, PathPosterior};
use crate::posterior::Chain;

/// Probability of a tie, or an explicit marker when the dyad is unobserved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeValue {
    Prob(f64),
    Unmonitored,
}

impl EdgeValue {
    pub fn prob(self) -> Option<f64> {
        match self {
            EdgeValue::Prob(p) => Some(p),
            EdgeValue::Unmonitored => None,
        }
    }
}

impl Serialize for EdgeValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.prob().serialize(s)
    }
}

impl<'de> Deserialize<'de> for EdgeValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.map_or(EdgeValue::Unmonitored, EdgeValue::Prob))
    }
}

/// Posterior-averaged smoothed path of one dyad.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePosterior {
    pub dyad: Dyad,
    pub window: ObservationWindow,
    /// Knot probabilities averaged over draws; `loglik` is the mean marginal
    /// log-likelihood of the dyad.
    pub path: PathPosterior<f64>,
}

impl EdgePosterior {
    pub fn at(&self, t: f64) -> EdgeValue {
        if self.window.covers(t) {
            EdgeValue::Prob(self.path.interp(t))
        } else {
            EdgeValue::Unmonitored
        }
    }

    pub fn series(&self, times: &[f64]) -> Vec<EdgeValue> {
        times.iter().map(|&t| self.at(t)).collect()
    }

    /// Average over observed time; exact for the piecewise-linear curve.
    pub fn mean_probability(&self) -> f64 {
        let measure = self.window.measure();
        if !(measure > 0.0) {
            return f64::NAN;
        }
        let knots = &self.path.midpoints;
        let mut total = 0.0;
        for span in self.window.spans() {
            let lo = knots.partition_point(|&m| m <= span.start);
            let hi = knots.partition_point(|&m| m < span.end);
            let mut cur = span.start;
            let mut p_cur = self.path.interp(cur);
            for &k in knots[lo..hi].iter().chain(std::iter::once(&span.end)) {
                let p_next = self.path.interp(k);
                total += 0.5 * (p_cur + p_next) * (k - cur);
                cur = k;
                p_cur = p_next;
            }
        }
        (total / measure).clamp(0.0, 1.0)
    }
}

/// Edge posteriors for every modeled dyad.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEstimate {
    pub edges: Vec<EdgePosterior>,
    pub samples_used: usize,
    pub thin: usize,
}

/// Averages the smoothed paths over every `thin`-th retained draw.
pub fn estimate_network(
    spec: &ModelSpec,
    dataset: &Dataset,
    chain: &Chain,
    thin: usize,
    parallel: bool,
) -> Result<NetworkEstimate> {
    if chain.is_empty() {
        return Err(Error::config("the chain has no samples"));
    }
    if chain.names != spec.parameter_names() {
        return Err(Error::config("chain parameters do not match the model"));
    }
    let thin = thin.max(1);
    let bound: Vec<_> = chain
        .thinned(thin)
        .map(|s| {
            spec.bind(&s.values)
                .map_err(|r| Error::Numerical(format!("sample {}: {}", s.iter, r.0)))
        })
        .collect::<Result<_>>()?;
    let one = |stream: &crate::events::EventStream| -> Result<EdgePosterior> {
        let cov = spec.covariates(&dataset.actors, stream.dyad)?;
        let kernel = DyadKernel::new(spec, stream, cov);
        let n = kernel.rows();
        let mut acc = vec![0.0; n];
        let mut loglik = 0.0;
        let mut rows = Vec::with_capacity(n);
        let mut trans = Vec::with_capacity(n);
        for b in &bound {
            let ctmc = b
                .sparsity
                .sparsity_for(&kernel.cov)
                .map_err(|r| Error::Numerical(r.0))?;
            kernel
                .fill_emissions(&b.intensity, &mut rows)
                .map_err(|r| Error::Numerical(r.0))?;
            kernel.fill_log_transitions(&ctmc, &mut trans);
            let (p0, p1) = ctmc.stationary();
            let log_pi = [p0.ln(), p1.ln()];
            loglik += forward_loglik_parts(&rows, &trans, log_pi);
            let probs = smooth_parts(&rows, &trans, log_pi);
            for (a, p) in acc.iter_mut().zip(probs) {
                *a += p;
            }
        }
        let k = bound.len() as f64;
        let probs: Vec<f64> = acc.iter().map(|a| (a / k).clamp(0.0, 1.0)).collect();
        let has_events = kernel.partition.has_events();
        Ok(EdgePosterior {
            dyad: stream.dyad,
            window: stream.window.clone(),
            path: PathPosterior {
                midpoints: kernel.partition.midpoints.clone(),
                zero_event_prob: (!has_events).then(|| probs.first().copied().unwrap_or(f64::NAN)),
                probs: if has_events { probs } else { Vec::new() },
                loglik: loglik / k,
            },
        })
    };
    let modeled = dataset.streams.iter().filter(|s| s.window.measure() > 0.0);
    let edges: Vec<EdgePosterior> = if parallel {
        modeled.collect::<Vec<_>>().into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        modeled.map(one).collect::<Result<_>>()?
    };
    Ok(NetworkEstimate {
        edges,
        samples_used: bound.len(),
        thin,
    })
}

impl NetworkEstimate {
    pub fn edge(&self, dyad: Dyad) -> Option<&EdgePosterior> {
        self.edges
            .binary_search_by(|e| e.dyad.cmp(&dyad))
            .ok()
            .map(|k| &self.edges[k])
    }

    /// `Unmonitored` for unknown dyads as well as uncovered times.
    pub fn edge_probability(&self, dyad: Dyad, t: f64) -> EdgeValue {
        self.edge(dyad).map_or(EdgeValue::Unmonitored, |e| e.at(t))
    }

    pub fn snapshot(&self, t: f64, threshold: Option<f64>, actors: &[ActorId]) -> Snapshot {
        let mut edges = Vec::new();
        let mut monitored: BTreeMap<ActorId, bool> = actors.iter().map(|&a| (a, false)).collect();
        for e in &self.edges {
            if let EdgeValue::Prob(p) = e.at(t) {
                edges.push(SnapshotEdge {
                    i: e.dyad.i,
                    j: e.dyad.j,
                    prob: p,
                });
                monitored.insert(e.dyad.i, true);
                monitored.insert(e.dyad.j, true);
            }
        }
        let strong = threshold.map(|thr| edges.iter().filter(|e| e.prob >= thr).copied().collect());
        Snapshot {
            time: t,
            threshold,
            edges,
            strong,
            monitored,
        }
    }

    pub fn series(&self, times: &[f64]) -> Vec<EdgeSeries> {
        self.edges
            .iter()
            .map(|e| EdgeSeries {
                dyad: (e.dyad.i, e.dyad.j),
                times: times.to_vec(),
                probs: e.series(times),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdge {
    pub i: ActorId,
    pub j: ActorId,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: f64,
    pub threshold: Option<f64>,
    /// Every dyad observed at `time`, ordered by `(i, j)`.
    pub edges: Vec<SnapshotEdge>,
    /// Edges at or above the threshold, when one is given.
    pub strong: Option<Vec<SnapshotEdge>>,
    /// Whether each actor has an observed dyad at `time`.
    pub monitored: BTreeMap<ActorId, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSeries {
    pub dyad: (ActorId, ActorId),
    pub times: Vec<f64>,
    pub probs: Vec<EdgeValue>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::config(format!("unknown export format `{other}`"))),
        }
    }
}

pub fn write_edges(w: impl Write, edges: &[SnapshotEdge], format: ExportFormat) -> Result<()> {
    match format {
        ExportFormat::Csv => {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["i", "j", "prob"])?;
            for e in edges {
                out.write_record([e.i.to_string(), e.j.to_string(), e.prob.to_string()])?;
            }
            out.flush().map_err(|e| Error::io("edges", e))?;
        }
        ExportFormat::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, edges)?;
            writeln!(w).map_err(|e| Error::io("edges", e))?;
        }
    }
    Ok(())
}

pub fn read_edges_csv(r: impl Read, source: &str) -> Result<Vec<SnapshotEdge>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["i", "j", "prob"] {
        return Err(Error::data(source, 1, "expected header `i,j,prob`"));
    }
    let mut out = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = n as u64 + 2;
        let rec = rec?;
        let bad = |what: &str| Error::data(source, line, format!("bad {what}"));
        out.push(SnapshotEdge {
            i: ActorId(rec[0].trim().parse().map_err(|_| bad("actor id"))?),
            j: ActorId(rec[1].trim().parse().map_err(|_| bad("actor id"))?),
            prob: rec[2].trim().parse().map_err(|_| bad("probability"))?,
        });
    }
    Ok(out)
}

pub fn write_series(w: impl Write, series: &[EdgeSeries], format: ExportFormat) -> Result<()> {
    match format {
        ExportFormat::Json => {
            let mut w = w;
            serde_json::to_writer_pretty(&mut w, series)?;
            writeln!(w).map_err(|e| Error::io("series", e))?;
        }
        ExportFormat::Csv => {
            let mut out = csv::Writer::from_writer(w);
            out.write_record(["i", "j", "t", "prob"])?;
            for s in series {
                for (t, p) in s.times.iter().zip(&s.probs) {
                    out.write_record([
                        s.dyad.0.to_string(),
                        s.dyad.1.to_string(),
                        t.to_string(),
                        p.prob().map_or_else(String::new, |v| v.to_string()),
                    ])?;
                }
            }
            out.flush().map_err(|e| Error::io("series", e))?;
        }
    }
    Ok(())
}

pub fn read_series_json(r: impl Read) -> Result<Vec<EdgeSeries>> {
    Ok(serde_json::from_reader(r)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotManifest {
    pub snapshots: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub time: f64,
    pub threshold: Option<f64>,
    pub file: String,
    pub edges: usize,
    pub strong_edges: Option<usize>,
    pub monitored_actors: usize,
}
