//! Schwarz-criterion approximations, from the ML fit and per posterior draw.

use crate::error::{Error, Result};
use crate::inference::{maximize_likelihood_with, DichotomousDataset, OptimizerConfig, PosteriorSample};
use crate::models::ModelFamily;
use crate::priors::{ModelPriorProbabilities, PriorFamily};
use crate::special::log_sum_exp;

use super::{MlEstimate, MlMethod};

/// `l̂ − (q/2) ln n`, with `n` the number of dose groups.
pub fn mle_schwarz_log_ml(l_hat: f64, q: usize, n_groups: usize) -> f64 {
    l_hat - 0.5 * q as f64 * (n_groups as f64).ln()
}

/// Fit the model by maximum likelihood and apply the Schwarz penalty.
pub fn ml_mle_schwarz(dataset: &DichotomousDataset, model: ModelFamily, prior: PriorFamily, cfg: OptimizerConfig) -> MlEstimate {
    match maximize_likelihood_with(dataset, model, cfg) {
        Ok(fit) => {
            let q = model.n_params();
            MlEstimate::new(MlMethod::MleSchwarz, model, prior, mle_schwarz_log_ml(fit.log_likelihood, q, dataset.n_groups()))
                .with_meta("log_lik_hat", fit.log_likelihood)
        }
        Err(e) => MlEstimate::failure(MlMethod::MleSchwarz, model, prior, e.to_string()),
    }
}

/// Posterior model weights averaged over per-draw Schwarz softmaxes.
///
/// Draw `s` of every model is paired with draw `s` of the others.
pub fn weights_mcmc_schwarz(per_model: &[&PosteriorSample], n_groups: usize, priors: &ModelPriorProbabilities) -> Result<Vec<f64>> {
    let k = per_model.len();
    if k == 0 {
        return Err(Error::NoModel);
    }
    if priors.len() != k {
        return Err(Error::Input(format!("{} model prior probabilities for {k} models", priors.len())));
    }
    let n = per_model[0].len();
    if per_model.iter().any(|s| s.len() != n) || n == 0 {
        return Err(Error::Input("posterior samples must have equal, nonzero draw counts".into()));
    }
    let log_prior = priors.log_probabilities();
    let penalty: Vec<f64> = per_model.iter().map(|s| 0.5 * s.dim as f64 * (n_groups as f64).ln()).collect();
    let mut weights = vec![0.0; k];
    let mut b = vec![0.0; k];
    for i in 0..n {
        for m in 0..k {
            b[m] = per_model[m].log_likelihoods()[i] - penalty[m] + log_prior[m];
        }
        let z = log_sum_exp(&b);
        if !z.is_finite() {
            continue;
        }
        for m in 0..k {
            weights[m] += (b[m] - z).exp();
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoModel);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}
