use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::intensity::{MitSpec, ModelSpec, SwallowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum PriorFamily {
    /// Rate parameterization: mean `1 / rate`.
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Beta { a: f64, b: f64 },
    PointMass { value: f64 },
}

/// Map from the constrained parameter to the sampler's coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    Log,
    Logit,
    /// The coordinate is the parameter itself, folded into `[lo, hi)`.
    Wrap,
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    #[serde(flatten)]
    pub family: PriorFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<Transform>,
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl Prior {
    pub fn exp(rate: f64) -> Prior {
        Prior {
            family: PriorFamily::Exponential { rate },
            transform: None,
        }
    }

    pub fn beta(a: f64, b: f64) -> Prior {
        Prior {
            family: PriorFamily::Beta { a, b },
            transform: None,
        }
    }

    pub fn uniform(lo: f64, hi: f64) -> Prior {
        Prior {
            family: PriorFamily::Uniform { lo, hi },
            transform: None,
        }
    }

    pub fn phase() -> Prior {
        Prior {
            family: PriorFamily::Uniform { lo: 0.0, hi: TAU },
            transform: Some(Transform::Wrap),
        }
    }

    pub fn fixed(value: f64) -> Prior {
        Prior {
            family: PriorFamily::PointMass { value },
            transform: None,
        }
    }

    pub fn transform(&self) -> Transform {
        self.transform.unwrap_or(match self.family {
            PriorFamily::Exponential { .. } => Transform::Log,
            PriorFamily::Uniform { .. } | PriorFamily::Beta { .. } => Transform::Logit,
            PriorFamily::PointMass { .. } => Transform::Identity,
        })
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.family, PriorFamily::PointMass { .. })
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        let ok = match self.family {
            PriorFamily::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            PriorFamily::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            PriorFamily::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            PriorFamily::PointMass { value } => value.is_finite(),
        };
        if !ok {
            return Err(Error::config(format!("invalid prior hyperparameters for `{name}`")));
        }
        let t = self.transform();
        let fits = matches!(
            (self.family, t),
            (PriorFamily::Exponential { .. }, Transform::Log)
                | (PriorFamily::Beta { .. }, Transform::Logit)
                | (PriorFamily::Uniform { .. }, Transform::Logit | Transform::Wrap)
                | (PriorFamily::PointMass { .. }, Transform::Identity)
        );
        if !fits {
            return Err(Error::config(format!(
                "transform {t:?} does not match the support of `{name}`"
            )));
        }
        Ok(())
    }

    /// Support bounds for the logit map.
    fn bounds(&self) -> (f64, f64) {
        match self.family {
            PriorFamily::Uniform { lo, hi } => (lo, hi),
            _ => (0.0, 1.0),
        }
    }

    pub fn log_density(&self, x: f64) -> f64 {
        match self.family {
            PriorFamily::Exponential { rate } => {
                if x >= 0.0 && x.is_finite() {
                    rate.ln() - rate * x
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorFamily::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorFamily::Beta { a, b } => {
                if x > 0.0 && x < 1.0 {
                    ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
                        + (a - 1.0) * x.ln()
                        + (b - 1.0) * (-x).ln_1p()
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorFamily::PointMass { value } => {
                if x == value {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self.family {
            PriorFamily::Exponential { rate } => 1.0 / rate,
            PriorFamily::Uniform { lo, hi } => 0.5 * (lo + hi),
            PriorFamily::Beta { a, b } => a / (a + b),
            PriorFamily::PointMass { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match self.family {
            PriorFamily::Exponential { rate } => 1.0 / (rate * rate),
            PriorFamily::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            PriorFamily::Beta { a, b } => a * b / ((a + b).powi(2) * (a + b + 1.0)),
            PriorFamily::PointMass { .. } => 0.0,
        }
    }

    /// `None` outside the open support of the transform.
    pub fn to_unconstrained(&self, x: f64) -> Option<f64> {
        match self.transform() {
            Transform::Log => (x > 0.0 && x.is_finite()).then(|| x.ln()),
            Transform::Logit => {
                let (lo, hi) = self.bounds();
                (x > lo && x < hi).then(|| {
                    let u = (x - lo) / (hi - lo);
                    u.ln() - (-u).ln_1p()
                })
            }
            Transform::Wrap => {
                let (lo, hi) = self.bounds();
                (lo..hi).contains(&x).then_some(x)
            }
            Transform::Identity => x.is_finite().then_some(x),
        }
    }

    pub fn from_unconstrained(&self, z: f64) -> f64 {
        match self.transform() {
            Transform::Log => z.exp(),
            Transform::Logit => {
                let (lo, hi) = self.bounds();
                let u = if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                };
                lo + (hi - lo) * u
            }
            Transform::Wrap => {
                let (lo, hi) = self.bounds();
                lo + (z - lo).rem_euclid(hi - lo)
            }
            Transform::Identity => z,
        }
    }

    /// `log |dx/dz|` at `z`.
    pub fn log_jacobian(&self, z: f64) -> f64 {
        match self.transform() {
            Transform::Log => z,
            Transform::Logit => {
                let (lo, hi) = self.bounds();
                (hi - lo).ln() - softplus(z) - softplus(-z)
            }
            Transform::Wrap | Transform::Identity => 0.0,
        }
    }
}

/// Named priors. Serialized as a JSON object keyed by parameter name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PriorSpec {
    pub entries: BTreeMap<String, Prior>,
}

impl PriorSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, prior: Prior) -> Self {
        self.entries.insert(name.into(), prior);
        self
    }

    /// The dormitory-study priors. The first term multiplier is pinned at 1.
    pub fn mit_default(spec: &MitSpec) -> PriorSpec {
        let mut p = PriorSpec::new();
        for name in spec.parameter_names() {
            let prior = match name.as_str() {
                "c0_t1" => Prior::fixed(1.0),
                "c2_1" | "c2_2" => Prior::exp(100.0),
                "s0" => Prior::beta(1.0, 49.0),
                "q" => Prior::exp(1e10),
                n if n.starts_with("phi") => Prior::phase(),
                _ => Prior::exp(1.0),
            };
            p.entries.insert(name, prior);
        }
        p
    }

    /// The colony-study priors.
    pub fn swallow_default(spec: &SwallowSpec) -> PriorSpec {
        let mut p = PriorSpec::new();
        for name in spec.parameter_names() {
            let prior = match name.as_str() {
                "c_FF" | "c_MF" | "c_MM" => Prior::exp(2.0),
                "s" => Prior::beta(1.0, 9.0),
                "q" => Prior::exp(1000.0),
                _ => Prior::exp(1.0),
            };
            p.entries.insert(name, prior);
        }
        p
    }

    /// Model defaults; custom models get unit-rate exponentials for every
    /// intensity parameter, `Beta(1, 9)` for `s` and `Exp(1)` for `q`.
    pub fn default_for(spec: &ModelSpec) -> PriorSpec {
        match spec {
            ModelSpec::Mit(m) => PriorSpec::mit_default(m),
            ModelSpec::Swallow(m) => PriorSpec::swallow_default(m),
            ModelSpec::Custom(_) => {
                let mut p = PriorSpec::new();
                for name in spec.parameter_names() {
                    let prior = if name == "s" {
                        Prior::beta(1.0, 9.0)
                    } else {
                        Prior::exp(1.0)
                    };
                    p.entries.insert(name, prior);
                }
                p
            }
        }
    }

    /// Priors in parameter order; every name needs exactly one entry.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<Prior>> {
        if let Some(extra) = self.entries.keys().find(|k| !names.contains(k)) {
            return Err(Error::config(format!("prior given for unknown parameter `{extra}`")));
        }
        names
            .iter()
            .map(|n| {
                let p = self
                    .entries
                    .get(n)
                    .copied()
                    .ok_or_else(|| Error::config(format!("no prior for parameter `{n}`")))?;
                p.validate(n)?;
                Ok(p)
            })
            .collect()
    }
}

/// Sum of independent log-densities; `-inf` outside the support.
pub fn log_prior(priors: &[Prior], theta: &[f64]) -> f64 {
    priors.iter().zip(theta).map(|(p, &x)| p.log_density(x)).sum()
}
