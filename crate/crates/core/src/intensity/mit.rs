//! Dormitory proximity model: weekly sinusoidal baseline with term and floor
//! multipliers, a friendship multiplier by floor status, and a daytime bump.

use serde::{Deserialize, Serialize};

use super::calendar::{next_sorted_after, span_breaks, span_index, PeriodicBreaks, SegmentKey};
use super::{DyadCovariates, Harmonic, RateForm};
use crate::error::Rejection;
use crate::events::Span;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Daytime {
    pub start_hour: f64,
    pub end_hour: f64,
}

impl Default for Daytime {
    fn default() -> Self {
        Daytime {
            start_hour: 8.0,
            end_hour: 17.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitSpec {
    /// School terms in hours; the first term's multiplier is the reference.
    pub terms: Vec<Span>,
    /// Fixed angular frequencies (rad/h) of the weekly harmonics. Left empty,
    /// they are selected from the data before fitting.
    #[serde(default)]
    pub frequencies: Option<Vec<f64>>,
    #[serde(default)]
    pub daytime: Daytime,
    /// Local time = t + offset, for the daytime indicator.
    #[serde(default)]
    pub utc_offset_hours: f64,
    #[serde(default = "default_floor")]
    pub floor_attribute: String,
    #[serde(default = "default_year")]
    pub year_attribute: String,
}

fn default_floor() -> String {
    "floor".into()
}

fn default_year() -> String {
    "year".into()
}

/// Values of the sampled parameters.
///
/// `amplitude_scales` are the sampled `r_l >= 0`; the
/// effective amplitudes are `k0 r_l / (1 + Σ r)`, which keeps the baseline
/// strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct MitParams {
    pub c0_term: Vec<f64>,
    pub c1: f64,
    pub c2_1: f64,
    pub c2_2: f64,
    pub c3: f64,
    pub k0: f64,
    pub amplitude_scales: Vec<f64>,
    pub phases: Vec<f64>,
    pub harmonics: Vec<Harmonic>,
}

impl MitSpec {
    pub fn harmonic_count(&self) -> usize {
        self.frequencies.as_ref().map_or(3, Vec::len)
    }

    pub fn parameter_names(&self) -> Vec<String> {
        let h = self.harmonic_count();
        let mut names: Vec<String> = (1..=self.terms.len()).map(|t| format!("c0_t{t}")).collect();
        names.extend(["c1", "c2_1", "c2_2", "c3", "k0"].map(String::from));
        names.extend((1..=h).map(|l| format!("r{l}")));
        names.extend((1..=h).map(|l| format!("phi{l}")));
        names.extend(["s0", "s1", "s2", "q"].map(String::from));
        names
    }

    pub(super) fn intensity_param_count(&self) -> usize {
        self.terms.len() + 5 + 2 * self.harmonic_count()
    }

    fn daytime_breaks(&self) -> PeriodicBreaks {
        PeriodicBreaks {
            period: 24.0,
            shift: self.utc_offset_hours,
            points: vec![self.daytime.start_hour, self.daytime.end_hour],
        }
    }

    pub fn key_at(&self, t: f64) -> SegmentKey {
        match span_index(&self.terms, t) {
            Some(term) => {
                let day = self.daytime_breaks().index_at(t) == 0;
                SegmentKey(term as u32 * 2 + u32::from(day))
            }
            None => SegmentKey::OUTSIDE,
        }
    }

    pub fn next_break(&self, t: f64, term_breaks: &[f64]) -> f64 {
        next_sorted_after(term_breaks, t).min(self.daytime_breaks().next_after(t))
    }

    pub fn term_breaks(&self) -> Vec<f64> {
        span_breaks(&self.terms)
    }

    pub fn bind(&self, theta: &[f64]) -> Result<MitParams, Rejection> {
        let nt = self.terms.len();
        let h = self.harmonic_count();
        let freqs = self
            .frequencies
            .as_ref()
            .ok_or_else(|| Rejection("harmonic frequencies are not resolved".into()))?;
        let c0_term = theta[..nt].to_vec();
        let [c1, c2_1, c2_2, c3, k0] = [0, 1, 2, 3, 4].map(|i| theta[nt + i]);
        let amplitude_scales = theta[nt + 5..nt + 5 + h].to_vec();
        let phases = theta[nt + 5 + h..nt + 5 + 2 * h].to_vec();
        let nonneg = c0_term
            .iter()
            .chain(&amplitude_scales)
            .chain([&c1, &c2_1, &c2_2, &c3, &k0]);
        for v in nonneg {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Rejection(format!("negative or non-finite rate parameter {v}")));
            }
        }
        if !(k0 > 0.0) {
            return Err(Rejection("baseline level k0 must be positive".into()));
        }
        let total: f64 = amplitude_scales.iter().sum();
        let harmonics = amplitude_scales
            .iter()
            .zip(&phases)
            .zip(freqs)
            .map(|((&r, &phase), &omega)| Harmonic {
                amplitude: k0 * r / (1.0 + total),
                omega,
                phase,
            })
            .collect();
        Ok(MitParams {
            c0_term,
            c1,
            c2_1,
            c2_2,
            c3,
            k0,
            amplitude_scales,
            phases,
            harmonics,
        })
    }

    pub fn affects(&self, param: usize, cov: &DyadCovariates) -> bool {
        let nt = self.terms.len();
        let first_sparsity = self.intensity_param_count();
        match param {
            p if p == nt => cov.same_floor,
            p if p == nt + 1 => !cov.same_floor,
            p if p == nt + 2 => cov.same_floor,
            p if p == first_sparsity + 1 => cov.same_floor,
            p if p == first_sparsity + 2 => cov.same_year,
            _ => true,
        }
    }
}

impl MitParams {
    pub fn form(&self, key: SegmentKey, cov: &DyadCovariates, connected: bool) -> RateForm<'_> {
        if key == SegmentKey::OUTSIDE {
            return RateForm::ZERO;
        }
        let term = (key.0 / 2) as usize;
        let day = key.0 % 2 == 1;
        let floor = if cov.same_floor { 1.0 + self.c1 } else { 1.0 };
        let base = self.c0_term[term] * floor;
        if !connected {
            return RateForm {
                constant: base * self.k0,
                scale: base,
                harmonics: &self.harmonics,
            };
        }
        let m = if cov.same_floor { self.c2_2 } else { self.c2_1 };
        let bump = if day { self.c3 } else { 0.0 };
        RateForm {
            constant: (1.0 + m) * base * (self.k0 + bump),
            scale: (1.0 + m) * base,
            harmonics: &self.harmonics,
        }
    }
}
