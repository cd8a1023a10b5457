use rayon::prelude::*;

use crate::ctmc::CtmcParams;
use crate::error::{Error, Rejection, Result};
use crate::events::Dataset;
use crate::intensity::{ModelSpec, ParamRole};
use crate::latentpath::{forward_loglik_parts, DyadKernel};
use crate::real::CompensatedSum;

/// Log-likelihood seen by the sampler. A proposal differs from the last
/// committed point in one coordinate, which lets implementations reuse work.
pub trait LogLikelihood {
    /// Evaluates at `theta` and makes it the committed point.
    fn reset(&mut self, theta: &[f64]) -> f64;
    /// Evaluates at `theta`, which changes coordinate `changed` only.
    fn propose(&mut self, theta: &[f64], changed: usize) -> f64;
    /// Makes the last proposal the committed point.
    fn commit(&mut self);
}

/// Flat likelihood, for sampling the prior alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoLikelihood;

impl LogLikelihood for NoLikelihood {
    fn reset(&mut self, _: &[f64]) -> f64 {
        0.0
    }
    fn propose(&mut self, _: &[f64], _: usize) -> f64 {
        0.0
    }
    fn commit(&mut self) {}
}

/// Adapter for closures; nothing is cached.
pub struct FnLikelihood<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> LogLikelihood for FnLikelihood<F> {
    fn reset(&mut self, theta: &[f64]) -> f64 {
        (self.0)(theta)
    }
    fn propose(&mut self, theta: &[f64], _: usize) -> f64 {
        (self.0)(theta)
    }
    fn commit(&mut self) {}
}

#[derive(Debug, Clone, Default)]
struct DyadCache {
    rows: Vec<[f64; 2]>,
    trans: Vec<[[f64; 2]; 2]>,
    log_pi: [f64; 2],
    loglik: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Staged {
    None,
    Emissions,
    Transitions,
}

/// Marginal likelihood of a dataset, summed over dyads.
///
/// Each dyad keeps its emission rows and log transition matrices; a proposal
/// on an intensity parameter recomputes rows only, a proposal on a chain
/// parameter recomputes transitions only, and dyads the parameter cannot
/// reach are skipped.
pub struct DatasetLikelihood<'a> {
    spec: &'a ModelSpec,
    kernels: Vec<DyadKernel>,
    cur: Vec<DyadCache>,
    alt: Vec<DyadCache>,
    staged: Vec<Staged>,
    parallel: bool,
}

fn ctmc_for(
    bound: &crate::intensity::BoundModel<'_>,
    kernel: &DyadKernel,
) -> Result<CtmcParams<f64>, Rejection> {
    bound.sparsity.sparsity_for(&kernel.cov)
}

fn fill_transitions(kernel: &DyadKernel, ctmc: &CtmcParams<f64>, c: &mut DyadCache) {
    kernel.fill_log_transitions(ctmc, &mut c.trans);
    let (p0, p1) = ctmc.stationary();
    c.log_pi = [p0.ln(), p1.ln()];
}

impl<'a> DatasetLikelihood<'a> {
    pub fn new(spec: &'a ModelSpec, dataset: &Dataset, parallel: bool) -> Result<Self> {
        let kernels = dataset
            .streams
            .iter()
            .filter(|s| s.window.measure() > 0.0)
            .map(|s| Ok(DyadKernel::new(spec, s, spec.covariates(&dataset.actors, s.dyad)?)))
            .collect::<Result<Vec<_>>>()?;
        if kernels.is_empty() {
            return Err(Error::data("dataset", 0, "no modeled dyads"));
        }
        let n = kernels.len();
        Ok(DatasetLikelihood {
            spec,
            kernels,
            cur: vec![DyadCache::default(); n],
            alt: vec![DyadCache::default(); n],
            staged: vec![Staged::None; n],
            parallel,
        })
    }

    pub fn kernels(&self) -> &[DyadKernel] {
        &self.kernels
    }

    pub fn spec(&self) -> &'a ModelSpec {
        self.spec
    }

    /// Uncached evaluation, usable with shared access.
    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        let Ok(bound) = self.spec.bind(theta) else {
            return f64::NEG_INFINITY;
        };
        let one = |k: &DyadKernel| -> f64 {
            let mut c = DyadCache::default();
            let Ok(ctmc) = ctmc_for(&bound, k) else {
                return f64::NEG_INFINITY;
            };
            if k.fill_emissions(&bound.intensity, &mut c.rows).is_err() {
                return f64::NEG_INFINITY;
            }
            fill_transitions(k, &ctmc, &mut c);
            forward_loglik_parts(&c.rows, &c.trans, c.log_pi)
        };
        let terms: Vec<f64> = if self.parallel {
            self.kernels.par_iter().map(one).collect()
        } else {
            self.kernels.iter().map(one).collect()
        };
        reduce(&terms)
    }

    fn total(&self) -> f64 {
        let mut acc = CompensatedSum::new();
        for (l, s) in self.staged.iter().enumerate() {
            let v = if *s == Staged::None {
                self.cur[l].loglik
            } else {
                self.alt[l].loglik
            };
            if v == f64::NEG_INFINITY || v.is_nan() {
                return f64::NEG_INFINITY;
            }
            acc.add(v);
        }
        acc.total()
    }
}

fn reduce(terms: &[f64]) -> f64 {
    if terms.iter().any(|v| *v == f64::NEG_INFINITY || v.is_nan()) {
        return f64::NEG_INFINITY;
    }
    terms.iter().copied().collect::<CompensatedSum>().total()
}

impl LogLikelihood for DatasetLikelihood<'_> {
    fn reset(&mut self, theta: &[f64]) -> f64 {
        self.staged.iter_mut().for_each(|s| *s = Staged::None);
        let Ok(bound) = self.spec.bind(theta) else {
            return f64::NEG_INFINITY;
        };
        let work = |(k, c): (&DyadKernel, &mut DyadCache)| {
            c.loglik = f64::NEG_INFINITY;
            let Ok(ctmc) = ctmc_for(&bound, k) else { return };
            if k.fill_emissions(&bound.intensity, &mut c.rows).is_err() {
                return;
            }
            fill_transitions(k, &ctmc, c);
            c.loglik = forward_loglik_parts(&c.rows, &c.trans, c.log_pi);
        };
        if self.parallel {
            self.kernels.par_iter().zip(self.cur.par_iter_mut()).for_each(work);
        } else {
            self.kernels.iter().zip(self.cur.iter_mut()).for_each(work);
        }
        self.total()
    }

    fn propose(&mut self, theta: &[f64], changed: usize) -> f64 {
        self.staged.iter_mut().for_each(|s| *s = Staged::None);
        let Ok(bound) = self.spec.bind(theta) else {
            return f64::NEG_INFINITY;
        };
        let role = self.spec.role(changed);
        let spec = self.spec;
        let work = |((k, cur), (alt, staged)): (
            (&DyadKernel, &DyadCache),
            (&mut DyadCache, &mut Staged),
        )| {
            if !spec.affects(changed, &k.cov) {
                return;
            }
            alt.loglik = f64::NEG_INFINITY;
            match role {
                ParamRole::Intensity => {
                    *staged = Staged::Emissions;
                    if k.fill_emissions(&bound.intensity, &mut alt.rows).is_ok() {
                        alt.loglik = forward_loglik_parts(&alt.rows, &cur.trans, cur.log_pi);
                    }
                }
                ParamRole::Ctmc => {
                    *staged = Staged::Transitions;
                    if let Ok(ctmc) = ctmc_for(&bound, k) {
                        fill_transitions(k, &ctmc, alt);
                        alt.loglik = forward_loglik_parts(&cur.rows, &alt.trans, alt.log_pi);
                    }
                }
            }
        };
        if self.parallel {
            self.kernels
                .par_iter()
                .zip(self.cur.par_iter())
                .zip(self.alt.par_iter_mut().zip(self.staged.par_iter_mut()))
                .for_each(work);
        } else {
            self.kernels
                .iter()
                .zip(self.cur.iter())
                .zip(self.alt.iter_mut().zip(self.staged.iter_mut()))
                .for_each(work);
        }
        self.total()
    }

    fn commit(&mut self) {
        for l in 0..self.kernels.len() {
            let (cur, alt) = (&mut self.cur[l], &mut self.alt[l]);
            match self.staged[l] {
                Staged::None => {}
                Staged::Emissions => std::mem::swap(&mut cur.rows, &mut alt.rows),
                Staged::Transitions => {
                    std::mem::swap(&mut cur.trans, &mut alt.trans);
                    cur.log_pi = alt.log_pi;
                }
            }
            if self.staged[l] != Staged::None {
                cur.loglik = alt.loglik;
            }
            self.staged[l] = Staged::None;
        }
    }
}
