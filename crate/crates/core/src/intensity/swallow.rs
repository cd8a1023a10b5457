//! Observation-session baseline with sex-pairing multipliers for tied pairs.

use serde::{Deserialize, Serialize};

use super::calendar::{next_sorted_after, span_breaks, span_index, SegmentKey};
use super::{DyadCovariates, RateForm, SexPairing};
use crate::error::Rejection;
use crate::events::Span;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwallowSpec {
    /// Observation sessions; each gets its own baseline rate.
    pub sessions: Vec<Span>,
    #[serde(default = "default_sex")]
    pub sex_attribute: String,
}

fn default_sex() -> String {
    "sex".into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwallowParams {
    pub session_rates: Vec<f64>,
    /// Indexed by [`SexPairing::index`].
    pub pairing_multipliers: [f64; 3],
}

impl SwallowSpec {
    pub fn parameter_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.sessions.len()).map(|i| format!("k{i}")).collect();
        names.extend(["c_FF", "c_MF", "c_MM", "s", "q"].map(String::from));
        names
    }

    pub(super) fn intensity_param_count(&self) -> usize {
        self.sessions.len() + 3
    }

    pub fn key_at(&self, t: f64) -> SegmentKey {
        span_index(&self.sessions, t).map_or(SegmentKey::OUTSIDE, |i| SegmentKey(i as u32))
    }

    pub fn session_breaks(&self) -> Vec<f64> {
        span_breaks(&self.sessions)
    }

    pub fn next_break(&self, t: f64, breaks: &[f64]) -> f64 {
        next_sorted_after(breaks, t)
    }

    pub fn bind(&self, theta: &[f64]) -> Result<SwallowParams, Rejection> {
        let n = self.sessions.len();
        let session_rates = theta[..n].to_vec();
        let pairing_multipliers = [theta[n], theta[n + 1], theta[n + 2]];
        for v in session_rates.iter().chain(&pairing_multipliers) {
            if !(*v >= 0.0) || !v.is_finite() {
                return Err(Rejection(format!("negative or non-finite rate parameter {v}")));
            }
        }
        if !session_rates.iter().any(|&k| k > 0.0) {
            return Err(Rejection("every session rate is zero".into()));
        }
        Ok(SwallowParams {
            session_rates,
            pairing_multipliers,
        })
    }

    pub fn affects(&self, param: usize, cov: &DyadCovariates) -> bool {
        let n = self.sessions.len();
        if (n..n + 3).contains(&param) {
            cov.pairing.map(SexPairing::index) == Some(param - n)
        } else {
            true
        }
    }
}

impl SwallowParams {
    pub fn form(&self, key: SegmentKey, cov: &DyadCovariates, connected: bool) -> RateForm<'static> {
        if key == SegmentKey::OUTSIDE {
            return RateForm::ZERO;
        }
        let k = self.session_rates[key.0 as usize];
        let mult = match (connected, cov.pairing) {
            (true, Some(p)) => 1.0 + self.pairing_multipliers[p.index()],
            _ => 1.0,
        };
        RateForm {
            constant: mult * k,
            scale: 0.0,
            harmonics: &[],
        }
    }
}
