use std::io::Write;

use serde::{Deserialize, Serialize};

use super::mcmc::Chain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q50: f64,
    pub q95: f64,
    pub acceptance: f64,
    /// `None` for a constant trace.
    pub lag1_autocorr: Option<f64>,
    pub split_rhat: Option<f64>,
    pub ess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub samples: usize,
    pub params: Vec<ParamDiagnostics>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Type-7 sample quantile.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn autocov(xs: &[f64], m: f64, lag: usize) -> f64 {
    let n = xs.len();
    xs[..n - lag]
        .iter()
        .zip(&xs[lag..])
        .map(|(a, b)| (a - m) * (b - m))
        .sum::<f64>()
        / n as f64
}

pub fn lag1_autocorrelation(xs: &[f64]) -> Option<f64> {
    if xs.len() < 3 {
        return None;
    }
    let m = mean(xs);
    let c0 = autocov(xs, m, 0);
    (c0 > 0.0).then(|| autocov(xs, m, 1) / c0)
}

/// Potential scale reduction from the two halves of one chain.
pub fn split_rhat(xs: &[f64]) -> Option<f64> {
    let n = xs.len() / 2;
    if n < 2 {
        return None;
    }
    let halves = [&xs[..n], &xs[xs.len() - n..]];
    let w = 0.5 * (variance(halves[0]) + variance(halves[1]));
    if !(w > 0.0) {
        return None;
    }
    let (m0, m1) = (mean(halves[0]), mean(halves[1]));
    let grand = 0.5 * (m0 + m1);
    let b = n as f64 * ((m0 - grand).powi(2) + (m1 - grand).powi(2));
    let nf = n as f64;
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    Some((var_plus / w).sqrt())
}

/// Effective sample size with Geyer's initial positive sequence.
pub fn effective_sample_size(xs: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 4 {
        return None;
    }
    let m = mean(xs);
    let c0 = autocov(xs, m, 0);
    if !(c0 > 0.0) {
        return None;
    }
    let mut tau = -1.0;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = (autocov(xs, m, lag) + autocov(xs, m, lag + 1)) / c0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    Some(n as f64 / tau.max(1.0 / n as f64))
}

pub fn diagnostics(chain: &Chain) -> Result<DiagnosticsReport> {
    if chain.len() < 100 {
        return Err(Error::config(format!(
            "diagnostics need at least 100 samples, the chain has {}",
            chain.len()
        )));
    }
    let params = chain
        .names
        .iter()
        .enumerate()
        .map(|(p, name)| {
            let xs = chain.column(p);
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            ParamDiagnostics {
                name: name.clone(),
                mean: mean(&xs),
                sd: variance(&xs).sqrt(),
                q05: quantile(&sorted, 0.05),
                q50: quantile(&sorted, 0.5),
                q95: quantile(&sorted, 0.95),
                acceptance: chain.acceptance.get(p).copied().unwrap_or(f64::NAN),
                lag1_autocorr: lag1_autocorrelation(&xs),
                split_rhat: split_rhat(&xs),
                ess: effective_sample_size(&xs),
            }
        })
        .collect();
    Ok(DiagnosticsReport {
        samples: chain.len(),
        params,
    })
}

impl DiagnosticsReport {
    /// One row per parameter; undefined statistics are written as `NA`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "param",
            "mean",
            "sd",
            "q05",
            "q50",
            "q95",
            "acceptance",
            "lag1_autocorr",
            "split_rhat",
            "ess",
        ])?;
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        for p in &self.params {
            out.write_record([
                p.name.clone(),
                p.mean.to_string(),
                p.sd.to_string(),
                p.q05.to_string(),
                p.q50.to_string(),
                p.q95.to_string(),
                p.acceptance.to_string(),
                opt(p.lag1_autocorr),
                opt(p.split_rhat),
                opt(p.ess),
            ])?;
        }
        out.flush().map_err(|e| Error::io("diagnostics csv", e))?;
        Ok(())
    }
}
