//! Bridge sampling with the WARP-III transformation and the optimal bridge,
//! on the sampler's unconstrained coordinates.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::inference::diagnostics::batch_means_ratio;
use crate::inference::{DichotomousDataset, PosteriorSample, PosteriorTarget, Reparam};
use crate::priors::PriorSpec;
use crate::rng::{derive_seed, rng_from_seed};
use crate::special::{log_sum_exp, LN_2PI};

use super::{MlEstimate, MlMethod};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeConfig {
    /// Proposal draws; `None` uses the evaluation-half size.
    pub n_proposal: Option<usize>,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for BridgeConfig {
    fn default() -> Self {
        Self { n_proposal: None, max_iter: 1000, tol: 1e-10, seed: 0x6272_6964_6765 }
    }
}

pub fn ml_bridge_sampling(dataset: &DichotomousDataset, prior: &PriorSpec, posterior: &PosteriorSample) -> MlEstimate {
    ml_bridge_sampling_with(dataset, prior, posterior, BridgeConfig::default())
}

/// `log(e^a + e^b)`.
fn lae(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn std_normal_log_pdf(z: &[f64]) -> f64 {
    -0.5 * z.len() as f64 * LN_2PI - 0.5 * z.iter().map(|v| v * v).sum::<f64>()
}

/// Meng–Wong iteration on the log scale. `l1`/`l2` are log ratios
/// `log q̃ − log g` at the posterior and proposal draws. Returns the final
/// `log r`, the iteration count, and whether it converged.
fn iterate(l1: &[f64], l2: &[f64], init: f64, max_iter: usize, tol: f64) -> (f64, usize, bool) {
    let n1 = l1.len() as f64;
    let n2 = l2.len() as f64;
    let ls1 = (n1 / (n1 + n2)).ln();
    let ls2 = (n2 / (n1 + n2)).ln();
    let mut log_r = init;
    let mut num = vec![0.0; l2.len()];
    let mut den = vec![0.0; l1.len()];
    for it in 1..=max_iter {
        for (o, &l) in num.iter_mut().zip(l2) {
            *o = l - lae(ls1 + l, ls2 + log_r);
        }
        for (o, &l) in den.iter_mut().zip(l1) {
            *o = -lae(ls1 + l, ls2 + log_r);
        }
        let next = (log_sum_exp(&num) - n2.ln()) - (log_sum_exp(&den) - n1.ln());
        if !next.is_finite() {
            return (next, it, false);
        }
        let delta = (next - log_r).abs();
        log_r = next;
        if delta < tol {
            return (log_r, it, true);
        }
    }
    (log_r, max_iter, false)
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

pub fn ml_bridge_sampling_with(
    dataset: &DichotomousDataset,
    prior: &PriorSpec,
    posterior: &PosteriorSample,
    cfg: BridgeConfig,
) -> MlEstimate {
    let fail = |r: String| MlEstimate::failure(MlMethod::BridgeSampling, prior.model, prior.family, r);
    let dim = posterior.dim;
    let per = posterior.draws_per_chain();
    if per < 4 {
        return fail("too few posterior draws".into());
    }
    // First half of every chain fits the warp, second half is evaluated.
    let half = per / 2;
    let mut fit = Vec::new();
    let mut eval = Vec::new();
    for c in 0..posterior.chains {
        for i in 0..per {
            let d = posterior.free_draw(c * per + i);
            if i < half {
                fit.push(d);
            } else {
                eval.push(d);
            }
        }
    }
    let nf = fit.len() as f64;
    let mut mu = DVector::<f64>::zeros(dim);
    for d in &fit {
        mu += DVector::from_column_slice(d);
    }
    mu /= nf;
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for d in &fit {
        let c = DVector::from_column_slice(d) - &mu;
        cov += &c * c.transpose();
    }
    cov /= nf - 1.0;
    let Some(chol) = cov.clone().cholesky() else {
        return fail("degenerate posterior covariance in the fit half".into());
    };
    let l = chol.l();
    let log_det_l: f64 = l.diagonal().iter().map(|v| v.ln()).sum();
    if !log_det_l.is_finite() {
        return fail("degenerate posterior covariance in the fit half".into());
    }
    let Some(l_inv) = l.clone().try_inverse() else {
        return fail("singular Cholesky factor".into());
    };

    let target = PosteriorTarget::new(dataset, prior);
    let reparam = Reparam::for_prior(prior);
    let mut x = vec![0.0; dim];
    let mut log_q = |u: &[f64]| -> f64 {
        let lj = reparam.to_sampled(u, &mut x);
        target.log_posterior(&x) + lj
    };
    let mut a = vec![0.0; dim];
    let mut b = vec![0.0; dim];
    // log q̃(z) = log|L| − log 2 + log[q(μ + Lz) + q(μ − Lz)].
    let mut log_warped = |z: &[f64]| -> f64 {
        for i in 0..dim {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += l[(i, k)] * z[k];
            }
            a[i] = mu[i] + acc;
            b[i] = mu[i] - acc;
        }
        log_det_l - std::f64::consts::LN_2 + lae(log_q(&a), log_q(&b))
    };

    let mut rng = rng_from_seed(derive_seed(cfg.seed, &[prior.model as u64, posterior.seed]));
    let n1 = eval.len();
    let n2 = cfg.n_proposal.unwrap_or(n1).max(1);
    let mut z = vec![0.0; dim];
    let mut l1 = Vec::with_capacity(n1);
    let mut g1 = Vec::with_capacity(n1);
    for d in &eval {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        for i in 0..dim {
            let mut acc = 0.0;
            for k in 0..=i {
                acc += l_inv[(i, k)] * (d[k] - mu[k]);
            }
            z[i] = sign * acc;
        }
        let lg = std_normal_log_pdf(&z);
        g1.push(lg);
        l1.push(log_warped(&z) - lg);
    }
    let mut l2 = Vec::with_capacity(n2);
    let mut g2 = Vec::with_capacity(n2);
    for _ in 0..n2 {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let lg = std_normal_log_pdf(&z);
        g2.push(lg);
        l2.push(log_warped(&z) - lg);
    }
    if l1.iter().any(|v| v.is_nan()) || l2.iter().any(|v| v.is_nan()) {
        return fail("NaN in warped density".into());
    }

    let mut sorted = l1.clone();
    sorted.sort_by(f64::total_cmp);
    let init = sorted[sorted.len() / 2];
    let (log_r, iters, converged) = iterate(&l1, &l2, init, cfg.max_iter, cfg.tol);
    if !converged {
        return fail(format!("bridge iteration did not converge after {iters} iterations (last log r {log_r})"))
            .with_meta("iterations", iters as f64)
            .with_meta("last_log_r", log_r);
    }

    // Relative mean-squared error of the optimal bridge estimate.
    let s1 = n1 as f64 / (n1 + n2) as f64;
    let s2 = n2 as f64 / (n1 + n2) as f64;
    let f1: Vec<f64> = l2.iter().map(|&l| 1.0 / (s1 + s2 * (log_r - l).exp())).collect();
    let f2: Vec<f64> = l1.iter().map(|&l| 1.0 / (s1 * (l - log_r).exp() + s2)).collect();
    let (m1, v1) = mean_var(&f1);
    let (m2, v2) = mean_var(&f2);
    let rho = batch_means_ratio(&f2);
    let re2 = v1 / (m1 * m1) / n2 as f64 + rho * v2 / (m2 * m2) / n1 as f64;

    MlEstimate::new(MlMethod::BridgeSampling, prior.model, prior.family, log_r)
        .with_se(re2.sqrt())
        .with_meta("iterations", iters as f64)
        .with_meta("n_posterior", n1 as f64)
        .with_meta("n_proposal", n2 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{sample_posterior, McmcConfig};
    use crate::models::ModelFamily;
    use crate::priors::PriorFamily;

    #[test]
    fn iteration_fixed_point_for_identical_densities() {
        // q̃ = g means r = 1 exactly.
        let l = vec![0.0; 100];
        let (log_r, _, ok) = iterate(&l, &l, 3.0, 1000, 1e-12);
        assert!(ok);
        assert!(log_r.abs() < 1e-10);
    }

    #[test]
    fn conjugate_constant_model_recovers_one_eleventh() {
        let d = DichotomousDataset::single_group(0.0, 10, 5).unwrap();
        let prior = PriorSpec::built_in(PriorFamily::BbmdUniform, ModelFamily::Constant);
        let post = sample_posterior(&d, &prior, &McmcConfig::default()).unwrap();
        let est = ml_bridge_sampling(&d, &prior, &post);
        let se = est.mc_standard_error.unwrap();
        let err = (est.log_ml().unwrap() - (1.0f64 / 11.0).ln()).abs();
        assert!(err < 3.0 * se, "err {err} se {se}");
        assert!(se < 0.02);
    }

    #[test]
    fn deterministic_given_seed() {
        let d = DichotomousDataset::single_group(0.0, 10, 5).unwrap();
        let prior = PriorSpec::built_in(PriorFamily::ToxicrInformative, ModelFamily::Constant);
        let cfg = McmcConfig { iterations: 3000, warmup: 500, ..Default::default() };
        let post = sample_posterior(&d, &prior, &cfg).unwrap();
        assert_eq!(ml_bridge_sampling(&d, &prior, &post), ml_bridge_sampling(&d, &prior, &post));
    }
}
