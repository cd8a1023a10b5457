//! User-defined piecewise constant-plus-sinusoid intensities.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::calendar::{next_sorted_after, PeriodicBreaks, SegmentKey};
use super::{DyadCovariates, Harmonic, RateForm};
use crate::error::{Error, Rejection, Result};

/// A parameter name or a literal constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamRef {
    Value(f64),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicSpec {
    pub omega: f64,
    pub amplitude: ParamRef,
    pub phase: ParamRef,
}

/// Connected-dyad multiplier `m`: absent, shared, or per covariate group.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Multiplier {
    #[default]
    None,
    Shared(ParamRef),
    ByGroup(BTreeMap<String, ParamRef>),
}

/// `λ_y(t) = (1 + m y) (w_k + Σ_h amp_h cos(ω_h t + φ_h) + a_k y)` on segment `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomSpec {
    /// Segment boundaries. Without a period, `n + 1` sorted points bound `n`
    /// segments and the intensity is zero outside them. With a period, `n`
    /// points in `[0, period)` bound `n` segments, the last one wrapping.
    pub breakpoints: Vec<f64>,
    #[serde(default)]
    pub period: Option<f64>,
    pub w: Vec<ParamRef>,
    #[serde(default)]
    pub a: Vec<ParamRef>,
    #[serde(default)]
    pub m: Multiplier,
    /// Attribute whose sorted value pair names a dyad's group, e.g. `F-M`.
    #[serde(default)]
    pub group_attribute: Option<String>,
    #[serde(default)]
    pub harmonics: Vec<HarmonicSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomParams {
    pub w: Vec<f64>,
    pub a: Vec<f64>,
    pub multipliers: BTreeMap<String, f64>,
    pub shared_multiplier: f64,
    pub harmonics: Vec<Harmonic>,
}

impl CustomSpec {
    pub fn segment_count(&self) -> usize {
        match self.period {
            Some(_) => self.breakpoints.len(),
            None => self.breakpoints.len().saturating_sub(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::config("custom breakpoints must be strictly increasing"));
        }
        let n = self.segment_count();
        if n == 0 {
            return Err(Error::config("custom model needs at least one segment"));
        }
        if let Some(p) = self.period {
            if !(p > 0.0) || self.breakpoints.iter().any(|&b| !(0.0..p).contains(&b)) {
                return Err(Error::config("periodic breakpoints must lie in [0, period)"));
            }
        }
        if self.w.len() != n || !(self.a.is_empty() || self.a.len() == n) {
            return Err(Error::config(format!(
                "custom model has {n} segments but {} w and {} a entries",
                self.w.len(),
                self.a.len()
            )));
        }
        Ok(())
    }

    fn refs(&self) -> Vec<&ParamRef> {
        let mut refs: Vec<&ParamRef> = self.w.iter().chain(&self.a).collect();
        match &self.m {
            Multiplier::None => {}
            Multiplier::Shared(r) => refs.push(r),
            Multiplier::ByGroup(map) => refs.extend(map.values()),
        }
        for h in &self.harmonics {
            refs.push(&h.amplitude);
            refs.push(&h.phase);
        }
        refs
    }

    /// Intensity parameter names in first-appearance order, then `s`, `q`.
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in self.refs() {
            if let ParamRef::Name(n) = r {
                if !names.contains(n) {
                    names.push(n.clone());
                }
            }
        }
        names.push("s".into());
        names.push("q".into());
        names
    }

    pub(super) fn intensity_param_count(&self) -> usize {
        self.parameter_names().len() - 2
    }

    fn periodic(&self) -> Option<PeriodicBreaks> {
        self.period.map(|period| PeriodicBreaks {
            period,
            shift: 0.0,
            points: self.breakpoints.clone(),
        })
    }

    pub fn key_at(&self, t: f64) -> SegmentKey {
        match self.periodic() {
            Some(p) => SegmentKey(p.index_at(t) as u32),
            None => {
                let n = self.breakpoints.partition_point(|&b| b <= t);
                if n == 0 || n == self.breakpoints.len() {
                    SegmentKey::OUTSIDE
                } else {
                    SegmentKey(n as u32 - 1)
                }
            }
        }
    }

    pub fn next_break(&self, t: f64) -> f64 {
        match self.periodic() {
            Some(p) => p.next_after(t),
            None => next_sorted_after(&self.breakpoints, t),
        }
    }

    pub fn bind(&self, names: &[String], theta: &[f64]) -> Result<CustomParams, Rejection> {
        let lookup = |r: &ParamRef| -> f64 {
            match r {
                ParamRef::Value(v) => *v,
                ParamRef::Name(n) => {
                    let idx = names.iter().position(|x| x == n).expect("names come from the spec");
                    theta[idx]
                }
            }
        };
        let w: Vec<f64> = self.w.iter().map(lookup).collect();
        let a: Vec<f64> = if self.a.is_empty() {
            vec![0.0; w.len()]
        } else {
            self.a.iter().map(lookup).collect()
        };
        let harmonics: Vec<Harmonic> = self
            .harmonics
            .iter()
            .map(|h| Harmonic {
                amplitude: lookup(&h.amplitude),
                omega: h.omega,
                phase: lookup(&h.phase),
            })
            .collect();
        let (shared_multiplier, multipliers) = match &self.m {
            Multiplier::None => (0.0, BTreeMap::new()),
            Multiplier::Shared(r) => (lookup(r), BTreeMap::new()),
            Multiplier::ByGroup(map) => {
                (0.0, map.iter().map(|(g, r)| (g.clone(), lookup(r))).collect())
            }
        };
        let wobble: f64 = harmonics.iter().map(|h| h.amplitude.abs()).sum();
        for (k, (&wk, &ak)) in w.iter().zip(&a).enumerate() {
            if !(wk >= 0.0 && ak >= 0.0) || wk - wobble < 0.0 {
                return Err(Rejection(format!("segment {k} intensity can go negative")));
            }
        }
        if shared_multiplier < 0.0 || multipliers.values().any(|&m| !(m >= 0.0)) {
            return Err(Rejection("negative connected-dyad multiplier".into()));
        }
        Ok(CustomParams {
            w,
            a,
            multipliers,
            shared_multiplier,
            harmonics,
        })
    }

    pub fn affects(&self, names: &[String], param: usize, cov: &DyadCovariates) -> bool {
        if let Multiplier::ByGroup(map) = &self.m {
            let name = &names[param];
            let owners: Vec<&String> = map
                .iter()
                .filter(|(_, r)| matches!(r, ParamRef::Name(n) if n == name))
                .map(|(g, _)| g)
                .collect();
            let elsewhere = self
                .w
                .iter()
                .chain(&self.a)
                .chain(self.harmonics.iter().flat_map(|h| [&h.amplitude, &h.phase]))
                .any(|r| matches!(r, ParamRef::Name(n) if n == name));
            if !owners.is_empty() && !elsewhere {
                return cov.group.as_ref().is_some_and(|g| owners.contains(&g));
            }
        }
        true
    }
}

impl CustomParams {
    pub fn form(&self, key: SegmentKey, cov: &DyadCovariates, connected: bool) -> RateForm<'_> {
        if key == SegmentKey::OUTSIDE {
            return RateForm::ZERO;
        }
        let k = key.0 as usize;
        if !connected {
            return RateForm {
                constant: self.w[k],
                scale: 1.0,
                harmonics: &self.harmonics,
            };
        }
        let m = match &cov.group {
            Some(g) if !self.multipliers.is_empty() => {
                self.multipliers.get(g).copied().unwrap_or(0.0)
            }
            _ => self.shared_multiplier,
        };
        RateForm {
            constant: (1.0 + m) * (self.w[k] + self.a[k]),
            scale: 1.0 + m,
            harmonics: &self.harmonics,
        }
    }
}
