//! Structured Poisson intensities.
//!
//! Every supported model has the shape
//! `λ(t) = (1 + m(t, x) y) (w(t, x) + a(t, x) y)` and, on each structural
//! segment (a school term at daytime, an observation session, a user-defined
//! piece), reduces to a constant plus a scaled sum of fixed-frequency cosines.
//! That keeps both evaluation and integration closed-form: windows are cut at
//! the segment boundaries and each piece integrates analytically.

mod calendar;
mod custom;
mod form;
mod fourier;
mod mit;
mod swallow;

use serde::{Deserialize, Serialize};

use crate::ctmc::SparsityModel;
use crate::error::{Error, Rejection, Result};
use crate::events::{ActorTable, Dataset, Dyad, ObservationWindow};

pub use calendar::{PeriodicBreaks, Segment, SegmentKey};
pub use custom::{CustomParams, CustomSpec, HarmonicSpec, Multiplier, ParamRef};
pub use form::{Harmonic, RateForm};
pub use fourier::{fix_frequencies, weekly_histogram, FALLBACK_FREQUENCIES, WEEK_HOURS};
pub use mit::{Daytime, MitParams, MitSpec};
pub use swallow::{SwallowParams, SwallowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SexPairing {
    FF,
    MF,
    MM,
}

impl SexPairing {
    pub fn index(self) -> usize {
        match self {
            SexPairing::FF => 0,
            SexPairing::MF => 1,
            SexPairing::MM => 2,
        }
    }

    fn parse_sex(raw: &str) -> Option<bool> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "m" | "male" => Some(true),
            "f" | "female" => Some(false),
            _ => None,
        }
    }

    pub fn from_sexes(a: &str, b: &str) -> Option<SexPairing> {
        match (Self::parse_sex(a)?, Self::parse_sex(b)?) {
            (false, false) => Some(SexPairing::FF),
            (true, true) => Some(SexPairing::MM),
            _ => Some(SexPairing::MF),
        }
    }
}

/// Dyad-level covariates, derived once from actor attributes.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DyadCovariates {
    pub same_floor: bool,
    pub same_year: bool,
    pub pairing: Option<SexPairing>,
    pub group: Option<String>,
}

/// Whether a parameter enters the Poisson intensity or the latent chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    Intensity,
    Ctmc,
}

/// Model configuration: kind plus fixed constants and covariate bindings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    Mit(MitSpec),
    Swallow(SwallowSpec),
    #[serde(rename = "custom-piecewise")]
    Custom(CustomSpec),
}

/// Parameters bound to a model: the intensity and the latent-chain law.
#[derive(Debug, Clone)]
pub struct BoundModel<'a> {
    pub intensity: Intensity<'a>,
    pub sparsity: SparsityModel,
}

#[derive(Debug, Clone)]
enum KindParams {
    Mit(MitParams),
    Swallow(SwallowParams),
    Custom(CustomParams),
}

/// An intensity with concrete parameter values.
#[derive(Debug, Clone)]
pub struct Intensity<'a> {
    spec: &'a ModelSpec,
    params: KindParams,
}

impl ModelSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelSpec::Mit(_) => "mit",
            ModelSpec::Swallow(_) => "swallow",
            ModelSpec::Custom(_) => "custom-piecewise",
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        match self {
            ModelSpec::Mit(m) => m.parameter_names(),
            ModelSpec::Swallow(m) => m.parameter_names(),
            ModelSpec::Custom(m) => m.parameter_names(),
        }
    }

    fn intensity_param_count(&self) -> usize {
        match self {
            ModelSpec::Mit(m) => m.intensity_param_count(),
            ModelSpec::Swallow(m) => m.intensity_param_count(),
            ModelSpec::Custom(m) => m.intensity_param_count(),
        }
    }

    pub fn role(&self, param: usize) -> ParamRole {
        if param < self.intensity_param_count() {
            ParamRole::Intensity
        } else {
            ParamRole::Ctmc
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Mit(m) => {
                if m.terms.is_empty() {
                    return Err(Error::config("mit model needs at least one term"));
                }
                ObservationWindow::new(m.terms.clone())?;
                if let Some(f) = &m.frequencies {
                    if f.iter().any(|w| !w.is_finite()) {
                        return Err(Error::config("harmonic frequencies must be finite"));
                    }
                }
                let d = &m.daytime;
                if !(0.0 <= d.start_hour && d.start_hour < d.end_hour && d.end_hour <= 24.0) {
                    return Err(Error::config("daytime must satisfy 0 <= start < end <= 24"));
                }
                Ok(())
            }
            ModelSpec::Swallow(m) => {
                if m.sessions.is_empty() {
                    return Err(Error::config("swallow model needs at least one session"));
                }
                ObservationWindow::new(m.sessions.clone()).map(|_| ())
            }
            ModelSpec::Custom(m) => m.validate(),
        }
    }

    /// Fills in data-driven constants (the weekly harmonic frequencies of the
    /// dormitory model) when the configuration leaves them open.
    pub fn resolve(&mut self, dataset: &Dataset) {
        if let ModelSpec::Mit(m) = self {
            if m.frequencies.is_none() {
                let times = dataset.streams.iter().flat_map(|s| s.times.iter().copied());
                let hist = weekly_histogram(times, 168, m.utc_offset_hours);
                m.frequencies = Some(fix_frequencies(&hist).to_vec());
            }
        }
    }

    pub fn covariates(&self, actors: &ActorTable, dyad: Dyad) -> Result<DyadCovariates> {
        let same = |key: &str| match (actors.attr(dyad.i, key), actors.attr(dyad.j, key)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        };
        match self {
            ModelSpec::Mit(m) => Ok(DyadCovariates {
                same_floor: same(&m.floor_attribute),
                same_year: same(&m.year_attribute),
                ..Default::default()
            }),
            ModelSpec::Swallow(m) => {
                let sex = |id| {
                    actors.attr(id, &m.sex_attribute).ok_or_else(|| {
                        Error::config(format!("actor {id} has no `{}` attribute", m.sex_attribute))
                    })
                };
                let pairing = SexPairing::from_sexes(sex(dyad.i)?, sex(dyad.j)?).ok_or_else(|| {
                    Error::config(format!("unrecognized sex values for dyad {dyad}"))
                })?;
                Ok(DyadCovariates {
                    pairing: Some(pairing),
                    ..Default::default()
                })
            }
            ModelSpec::Custom(m) => {
                let group = m.group_attribute.as_ref().and_then(|key| {
                    let a = actors.attr(dyad.i, key)?;
                    let b = actors.attr(dyad.j, key)?;
                    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                    Some(format!("{lo}-{hi}"))
                });
                Ok(DyadCovariates {
                    group,
                    ..Default::default()
                })
            }
        }
    }

    /// Segment label at a single instant (half-open segments).
    pub fn key_at(&self, t: f64) -> SegmentKey {
        match self {
            ModelSpec::Mit(m) => m.key_at(t),
            ModelSpec::Swallow(m) => m.key_at(t),
            ModelSpec::Custom(m) => m.key_at(t),
        }
    }

    /// Appends the structural segments of `[a, b)` to `out`.
    pub fn segments(&self, a: f64, b: f64, out: &mut Vec<Segment>) {
        match self {
            ModelSpec::Mit(m) => {
                let breaks = m.term_breaks();
                calendar::split(a, b, |t| m.next_break(t, &breaks), |t| m.key_at(t), out)
            }
            ModelSpec::Swallow(m) => {
                let breaks = m.session_breaks();
                calendar::split(a, b, |t| m.next_break(t, &breaks), |t| m.key_at(t), out)
            }
            ModelSpec::Custom(m) => calendar::split(a, b, |t| m.next_break(t), |t| m.key_at(t), out),
        }
    }

    /// Segments of every span of a window.
    pub fn window_segments(&self, window: &ObservationWindow) -> Vec<Segment> {
        let mut out = Vec::new();
        for s in window.spans() {
            self.segments(s.start, s.end, &mut out);
        }
        out
    }

    pub fn bind(&self, theta: &[f64]) -> Result<BoundModel<'_>, Rejection> {
        let names = self.parameter_names();
        if theta.len() != names.len() {
            return Err(Rejection(format!(
                "expected {} parameters, got {}",
                names.len(),
                theta.len()
            )));
        }
        let params = match self {
            ModelSpec::Mit(m) => KindParams::Mit(m.bind(theta)?),
            ModelSpec::Swallow(m) => KindParams::Swallow(m.bind(theta)?),
            ModelSpec::Custom(m) => KindParams::Custom(m.bind(&names, theta)?),
        };
        let n = theta.len();
        let sparsity = match self {
            ModelSpec::Mit(_) => SparsityModel::FloorYear {
                s0: theta[n - 4],
                s1: theta[n - 3],
                s2: theta[n - 2],
                q: theta[n - 1],
            },
            _ => SparsityModel::Constant {
                s: theta[n - 2],
                q: theta[n - 1],
            },
        };
        Ok(BoundModel {
            intensity: Intensity { spec: self, params },
            sparsity,
        })
    }

    /// False only when a change of `param` provably leaves every emission or
    /// transition of a dyad with covariates `cov` unchanged.
    pub fn affects(&self, param: usize, cov: &DyadCovariates) -> bool {
        match self {
            ModelSpec::Mit(m) => m.affects(param, cov),
            ModelSpec::Swallow(m) => m.affects(param, cov),
            ModelSpec::Custom(m) => m.affects(&self.parameter_names(), param, cov),
        }
    }
}

impl<'a> Intensity<'a> {
    pub fn spec(&self) -> &'a ModelSpec {
        self.spec
    }

    /// Rate form on a segment for latent state `connected`.
    #[inline]
    pub fn form(&self, key: SegmentKey, cov: &DyadCovariates, connected: bool) -> RateForm<'_> {
        match &self.params {
            KindParams::Mit(p) => p.form(key, cov, connected),
            KindParams::Swallow(p) => p.form(key, cov, connected),
            KindParams::Custom(p) => p.form(key, cov, connected),
        }
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        match &self.params {
            KindParams::Mit(p) => &p.harmonics,
            KindParams::Swallow(_) => &[],
            KindParams::Custom(p) => &p.harmonics,
        }
    }

    /// λ at `t` without a window check.
    pub fn rate(&self, t: f64, cov: &DyadCovariates, connected: bool) -> f64 {
        self.form(self.spec.key_at(t), cov, connected).eval(t)
    }

    /// `∫_a^b λ dt` split at structural breakpoints.
    pub fn integrate_span(&self, a: f64, b: f64, cov: &DyadCovariates, connected: bool) -> f64 {
        let mut segs = Vec::new();
        self.spec.segments(a, b, &mut segs);
        segs.iter()
            .map(|s| self.form(s.key, cov, connected).integral(s.start, s.end))
            .sum()
    }

    pub fn integrate(&self, window: &ObservationWindow, cov: &DyadCovariates, connected: bool) -> f64 {
        window
            .spans()
            .iter()
            .map(|s| self.integrate_span(s.start, s.end, cov, connected))
            .sum()
    }
}

/// λ_ij(t) for latent state `connected`; `t` must be observable.
pub fn eval_lambda(
    intensity: &Intensity<'_>,
    window: &ObservationWindow,
    t: f64,
    cov: &DyadCovariates,
    connected: bool,
) -> Result<f64> {
    if !window.covers(t) {
        return Err(Error::OutsideWindow(t));
    }
    Ok(intensity.rate(t, cov, connected))
}

/// Compensator `∫_window λ dt`, exact up to rounding.
pub fn integrate_lambda(
    intensity: &Intensity<'_>,
    window: &ObservationWindow,
    cov: &DyadCovariates,
    connected: bool,
) -> f64 {
    intensity.integrate(window, cov, connected)
}
