//! Priors, the parameter posterior and the sampler.

mod diagnostics;
mod likelihood;
mod mcmc;
mod prior;

pub use diagnostics::{
    diagnostics, effective_sample_size, lag1_autocorrelation, quantile, split_rhat,
    DiagnosticsReport, ParamDiagnostics,
};
pub use likelihood::{DatasetLikelihood, FnLikelihood, LogLikelihood, NoLikelihood};
pub use mcmc::{run_chain, Chain, McmcConfig, ThetaSample};
pub use prior::{log_prior, Prior, PriorFamily, PriorSpec, Transform};

use crate::error::Result;
use crate::events::Dataset;
use crate::intensity::ModelSpec;

/// Unnormalized log-posterior of a model on a dataset.
pub struct LogPosterior<'a> {
    pub names: Vec<String>,
    pub priors: Vec<Prior>,
    pub likelihood: DatasetLikelihood<'a>,
}

impl<'a> LogPosterior<'a> {
    pub fn new(spec: &'a ModelSpec, dataset: &Dataset, priors: &PriorSpec, parallel: bool) -> Result<Self> {
        spec.validate()?;
        let names = spec.parameter_names();
        let priors = priors.resolve(&names)?;
        let likelihood = DatasetLikelihood::new(spec, dataset, parallel)?;
        Ok(LogPosterior {
            names,
            priors,
            likelihood,
        })
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        self.likelihood.evaluate(theta)
    }

    pub fn log_posterior(&self, theta: &[f64]) -> f64 {
        let lp = log_prior(&self.priors, theta);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + self.log_likelihood(theta)
    }
}

/// Runs the sampler on `dataset`. With `use_likelihood` off the chain
/// targets the prior alone.
pub fn sample_posterior(
    dataset: &Dataset,
    spec: &ModelSpec,
    priors: &PriorSpec,
    config: &McmcConfig,
    use_likelihood: bool,
    parallel: bool,
) -> Result<Chain> {
    let mut post = LogPosterior::new(spec, dataset, priors, parallel)?;
    if use_likelihood {
        run_chain(&post.names, &post.priors, &mut post.likelihood, config)
    } else {
        run_chain(&post.names, &post.priors, &mut NoLikelihood, config)
    }
}
