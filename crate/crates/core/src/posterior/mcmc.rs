use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::likelihood::LogLikelihood;
use super::prior::{log_prior, Prior};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    /// Total sweeps including burn-in.
    pub iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Acceptance band the proposal scales are steered into during burn-in.
    pub target_accept: (f64, f64),
    /// Starting values overriding the prior means.
    pub init: BTreeMap<String, f64>,
    /// Initial random-walk scale in the unconstrained coordinates.
    pub initial_scale: f64,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 10_000,
            burn_in: 1_000,
            seed: 0,
            target_accept: (0.2, 0.4),
            init: BTreeMap::new(),
            initial_scale: 0.1,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn-in {} must be below the iteration count {}",
                self.burn_in, self.iterations
            )));
        }
        let (lo, hi) = self.target_accept;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(Error::config("target acceptance band must satisfy 0 < lo <= hi < 1"));
        }
        if !(self.initial_scale > 0.0 && self.initial_scale.is_finite()) {
            return Err(Error::config("initial proposal scale must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSample {
    pub iter: usize,
    pub values: Vec<f64>,
    pub log_posterior: f64,
}

/// Retained draws, burn-in removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub names: Vec<String>,
    pub samples: Vec<ThetaSample>,
    pub burn_in: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Post-burn-in acceptance rate per parameter; fixed parameters report 0.
    pub acceptance: Vec<f64>,
    /// Frozen proposal scales.
    pub scales: Vec<f64>,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Trace of one parameter.
    pub fn column(&self, p: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.values[p]).collect()
    }

    /// Every `m`-th retained sample, counting from the first.
    pub fn thinned(&self, m: usize) -> impl Iterator<Item = &ThetaSample> {
        self.samples.iter().step_by(m.max(1))
    }

    /// `iter,log_posterior,<names...>`; values use shortest round-trip formatting.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["iter".to_string(), "log_posterior".to_string()];
        header.extend(self.names.iter().cloned());
        out.write_record(&header)?;
        for s in &self.samples {
            let mut rec = vec![s.iter.to_string(), s.log_posterior.to_string()];
            rec.extend(s.values.iter().map(f64::to_string));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("chain csv", e))?;
        Ok(())
    }

    /// Reads a chain CSV. Run metadata not stored in the file is inferred:
    /// burn-in from the first iteration index, acceptance from value changes.
    pub fn read_csv<R: BufRead>(r: R, source: &str) -> Result<Chain> {
        let mut rdr = csv::Reader::from_reader(r);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || &header[0] != "iter" || &header[1] != "log_posterior" {
            return Err(Error::data(source, 1, "expected header `iter,log_posterior,...`"));
        }
        let names: Vec<String> = header.iter().skip(2).map(String::from).collect();
        let mut samples = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let line = n as u64 + 2;
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::data(source, line, "wrong number of fields"));
            }
            let num = |k: usize| -> Result<f64> {
                rec[k]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::data(source, line, format!("field {} is not a number", k + 1)))
            };
            let iter = rec[0]
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::data(source, line, "iteration is not an integer"))?;
            let values = (2..rec.len()).map(num).collect::<Result<Vec<_>>>()?;
            samples.push(ThetaSample {
                iter,
                values,
                log_posterior: num(1)?,
            });
        }
        let burn_in = samples.first().map_or(0, |s| s.iter);
        let iterations = samples.last().map_or(0, |s| s.iter + 1);
        let acceptance = (0..names.len())
            .map(|p| {
                let changes = samples.windows(2).filter(|w| w[0].values[p] != w[1].values[p]).count();
                changes as f64 / samples.len().saturating_sub(1).max(1) as f64
            })
            .collect();
        Ok(Chain {
            scales: vec![f64::NAN; names.len()],
            names,
            samples,
            burn_in,
            iterations,
            seed: 0,
            acceptance,
        })
    }
}

/// Adaptive component-wise random-walk Metropolis.
///
/// Each sweep updates the free parameters in order with a Gaussian step in
/// the unconstrained coordinates. During burn-in each log scale moves by
/// `(α - target) / (n + 1)^0.6`; afterwards the scales are frozen.
pub fn run_chain(
    names: &[String],
    priors: &[Prior],
    likelihood: &mut dyn LogLikelihood,
    config: &McmcConfig,
) -> Result<Chain> {
    config.validate()?;
    if names.len() != priors.len() {
        return Err(Error::config("parameter names and priors differ in length"));
    }
    if let Some(bad) = config.init.keys().find(|k| !names.contains(k)) {
        return Err(Error::config(format!("initial value for unknown parameter `{bad}`")));
    }
    let d = names.len();
    let mut theta: Vec<f64> = names
        .iter()
        .zip(priors)
        .map(|(n, p)| config.init.get(n).copied().unwrap_or_else(|| p.mean()))
        .collect();
    let mut z = Vec::with_capacity(d);
    for ((n, p), &x) in names.iter().zip(priors).zip(&theta) {
        if p.is_fixed() && p.log_density(x) == f64::NEG_INFINITY {
            return Err(Error::config(format!("`{n}` is fixed at {}; got {x}", p.mean())));
        }
        let zi = p
            .to_unconstrained(x)
            .ok_or_else(|| Error::config(format!("initial value {x} of `{n}` is outside its support")))?;
        z.push(zi);
    }
    let jac = |p: &Prior, zi: f64| if p.is_fixed() { 0.0 } else { p.log_jacobian(zi) };
    let mut lp_prior: Vec<f64> = priors.iter().zip(&theta).map(|(p, &x)| p.log_density(x)).collect();
    let mut lp_jac: Vec<f64> = priors.iter().zip(&z).map(|(p, &zi)| jac(p, zi)).collect();
    let mut loglik = likelihood.reset(&theta);
    if !loglik.is_finite() || !log_prior(priors, &theta).is_finite() {
        return Err(Error::config(
            "log-posterior at the initial point is not finite; adjust `init`",
        ));
    }

    let target = 0.5 * (config.target_accept.0 + config.target_accept.1);
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut log_scale = vec![config.initial_scale.ln(); d];
    let mut accepted = vec![0usize; d];
    let kept = config.iterations - config.burn_in;
    let mut samples = Vec::with_capacity(kept);
    let free: Vec<usize> = (0..d).filter(|&i| !priors[i].is_fixed()).collect();

    for iter in 0..config.iterations {
        let adapting = iter < config.burn_in;
        for &i in &free {
            let p = &priors[i];
            let step: f64 = rng.sample(StandardNormal);
            let zi = z[i] + log_scale[i].exp() * step;
            let xi = p.from_unconstrained(zi);
            // the wrapped coordinate is stored folded
            let zi = if p.transform() == super::prior::Transform::Wrap { xi } else { zi };
            let old = theta[i];
            theta[i] = xi;
            let prior_i = p.log_density(xi);
            let jac_i = jac(p, zi);
            let mut log_alpha = f64::NEG_INFINITY;
            let mut new_ll = f64::NEG_INFINITY;
            if prior_i.is_finite() && jac_i.is_finite() {
                new_ll = likelihood.propose(&theta, i);
                if new_ll.is_finite() {
                    log_alpha = (new_ll - loglik) + (prior_i - lp_prior[i]) + (jac_i - lp_jac[i]);
                }
            }
            let u: f64 = rng.gen();
            let accept = log_alpha >= 0.0 || u.ln() < log_alpha;
            if accept {
                likelihood.commit();
                z[i] = zi;
                loglik = new_ll;
                lp_prior[i] = prior_i;
                lp_jac[i] = jac_i;
                if !adapting {
                    accepted[i] += 1;
                }
            } else {
                theta[i] = old;
            }
            if adapting {
                let alpha = log_alpha.min(0.0).exp();
                log_scale[i] += (alpha - target) / ((iter + 1) as f64).powf(0.6);
            }
        }
        if !adapting {
            let mut acc = crate::real::CompensatedSum::new();
            acc.add(loglik);
            lp_prior.iter().for_each(|&v| acc.add(v));
            samples.push(ThetaSample {
                iter,
                values: theta.clone(),
                log_posterior: acc.total(),
            });
        }
    }
    Ok(Chain {
        names: names.to_vec(),
        samples,
        burn_in: config.burn_in,
        iterations: config.iterations,
        seed: config.seed,
        acceptance: accepted.iter().map(|&a| a as f64 / kept as f64).collect(),
        scales: log_scale.iter().map(|s| s.exp()).collect(),
    })
}
