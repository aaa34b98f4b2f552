//! Posterior-density (candidate's formula) estimate with a KDE posterior.

use serde::{Deserialize, Serialize};

use crate::inference::{DichotomousDataset, PosteriorSample, PosteriorTarget};
use crate::priors::PriorSpec;

use super::kde::GaussianKde;
use super::{MlEstimate, MlMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointEstimate {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DensityConfig {
    pub point: PointEstimate,
}

pub fn ml_density_estimation(dataset: &DichotomousDataset, prior: &PriorSpec, posterior: &PosteriorSample) -> MlEstimate {
    ml_density_estimation_with(dataset, prior, posterior, DensityConfig::default())
}

pub fn ml_density_estimation_with(
    dataset: &DichotomousDataset,
    prior: &PriorSpec,
    posterior: &PosteriorSample,
    cfg: DensityConfig,
) -> MlEstimate {
    let theta = match cfg.point {
        PointEstimate::Mean => posterior.mean(),
        PointEstimate::Median => posterior.median(),
    };
    let flat: Vec<f64> = posterior.iter().flatten().copied().collect();
    let Some(kde) = GaussianKde::fit(&flat, posterior.dim) else {
        return MlEstimate::failure(MlMethod::DensityEstimation, prior.model, prior.family, "degenerate posterior covariance");
    };
    ml_density_estimation_at(dataset, prior, &theta, |x| kde.log_density(x))
}

/// `log P(D|θ̂) + log P(θ̂) − log p̂(θ̂|D)` for any posterior log density.
pub fn ml_density_estimation_at(
    dataset: &DichotomousDataset,
    prior: &PriorSpec,
    theta: &[f64],
    log_posterior_density: impl Fn(&[f64]) -> f64,
) -> MlEstimate {
    let fail = |r: &str| MlEstimate::failure(MlMethod::DensityEstimation, prior.model, prior.family, r);
    let target = PosteriorTarget::new(dataset, prior);
    let (ll, lp) = target.log_terms(theta);
    if !(ll + lp).is_finite() {
        return fail("point estimate lies outside the posterior support");
    }
    let lq = log_posterior_density(theta);
    if lq == f64::NEG_INFINITY || lq.is_nan() {
        return fail("density estimate is zero at the point estimate");
    }
    let mut est = MlEstimate::new(MlMethod::DensityEstimation, prior.model, prior.family, ll + lp - lq)
        .with_meta("log_density_hat", lq);
    for (j, v) in theta.iter().enumerate() {
        est = est.with_meta(&format!("theta_{j}"), *v);
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelFamily;
    use crate::priors::PriorFamily;
    use statrs::function::beta::ln_beta;

    #[test]
    fn analytic_posterior_recovers_exact_ml() {
        let d = DichotomousDataset::single_group(0.0, 10, 5).unwrap();
        let prior = PriorSpec::built_in(PriorFamily::BbmdUniform, ModelFamily::Constant);
        let beta66 = |x: &[f64]| 5.0 * x[0].ln() + 5.0 * (1.0 - x[0]).ln() - ln_beta(6.0, 6.0);
        for p in [0.5, 0.3, 0.77] {
            let est = ml_density_estimation_at(&d, &prior, &[p], beta66);
            assert!((est.log_ml().unwrap().exp() - 1.0 / 11.0).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_density_is_a_failure() {
        let d = DichotomousDataset::single_group(0.0, 10, 5).unwrap();
        let prior = PriorSpec::built_in(PriorFamily::BbmdUniform, ModelFamily::Constant);
        assert!(ml_density_estimation_at(&d, &prior, &[0.5], |_| f64::NEG_INFINITY).is_failure());
    }
}
