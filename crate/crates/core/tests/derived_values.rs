//! Values derived by hand or by an independent route (statrs distributions,
//! closed-form inversions, direct binomial sums).

use statrs::distribution::{Binomial, Continuous, Discrete, Normal};

use bmdbma::inference::{log_likelihood, maximize_likelihood, maximize_posterior};
use bmdbma::marginal::{mle_schwarz_log_ml, ml_mc_reference};
use bmdbma::priors::Marginal;
use bmdbma::report::{embedded_dataset, oracle};
use bmdbma::rng::rng_from_seed;
use bmdbma::{BmrSpec, DichotomousDataset, ModelFamily, ParamVector, PriorFamily, PriorSpec};

fn model(name: &str) -> ModelFamily {
    ModelFamily::from_name(name).expect("known model")
}

// Parameter vectors follow `ModelFamily::param_names`: shape and slope first,
// background last.
#[test]
fn weibull_response() {
    let (g, a, b, d) = (0.1f64, 1.0f64, 2.0f64, 0.5f64);
    let want = g + (1.0 - g) * (1.0 - (-b * d.powf(a)).exp());
    let got = model("weibull").evaluate(&ParamVector::natural(vec![a, b, g]), d).unwrap();
    assert!((got - want).abs() < 1e-14);
    assert!((got - 0.668_909).abs() < 1e-6);
}

#[test]
fn closed_form_bmd_inversions() {
    let bmr = BmrSpec::new(0.1).unwrap();
    let ql = model("quantal-linear").bmd_from_params(&ParamVector::natural(vec![1.0, 0.3]), bmr).unwrap().unwrap();
    assert!((ql - (-(0.9f64).ln())).abs() < 1e-9);
    let ll = model("log-logistic").bmd_from_params(&ParamVector::natural(vec![0.0, 1.0, 0.2]), bmr).unwrap().unwrap();
    assert!((ll - 1.0 / 9.0).abs() < 1e-9);
}

#[test]
fn binomial_log_likelihood_by_direct_sum() {
    let d = embedded_dataset("dataset1").unwrap();
    let logistic = model("logistic");
    let theta = ParamVector::natural(vec![0.0, 1.0]);
    let want: f64 = d
        .groups()
        .iter()
        .map(|g| {
            let p = 1.0 / (1.0 + (-g.dose).exp());
            Binomial::new(p, g.n).unwrap().ln_pmf(g.y)
        })
        .sum();
    let got = log_likelihood(&d, logistic, &theta).unwrap();
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");

    let one = DichotomousDataset::single_group(0.0, 10, 5).unwrap();
    let fit = maximize_likelihood(&one, ModelFamily::Constant).unwrap();
    assert!((fit.log_likelihood - Binomial::new(0.5, 10).unwrap().ln_pmf(5)).abs() < 1e-9);
    assert!((fit.log_likelihood + 1.402_043).abs() < 1e-6);
}

#[test]
fn toxicr_logistic_prior_density_at_origin() {
    let prior = PriorSpec::built_in(PriorFamily::ToxicrInformative, model("logistic"));
    let want = Normal::new(0.0, 1.0).unwrap().ln_pdf(0.0) + Normal::new(0.0, 2.0).unwrap().ln_pdf(0.0);
    assert!((prior.log_density(&[0.0, 0.0]) - want).abs() < 1e-12);
}

#[test]
fn schwarz_formula() {
    assert!((mle_schwarz_log_ml(-10.0, 2, 4) - (-10.0 - 4f64.ln())).abs() < 1e-12);
    assert_eq!(mle_schwarz_log_ml(-3.0, 0, 4), -3.0);
}

#[test]
fn data_based_gamma_marginal_mean() {
    let prior = PriorSpec::built_in(PriorFamily::DataBasedInformative, model("logistic"));
    assert_eq!(prior.marginals[1], Marginal::Gamma { shape: 2.01, rate: 0.49 });
    let mut rng = rng_from_seed(11);
    let sampler = prior.sampler();
    let n = 1_000_000;
    let mut s = vec![0.0; 2];
    let mut sum = 0.0;
    for _ in 0..n {
        sampler.draw_into(&mut rng, &mut s);
        sum += s[1];
    }
    let mean = sum / n as f64;
    let band = 3.0 * 2.01f64.sqrt() / 0.49 / (n as f64).sqrt();
    assert!((mean - 2.01 / 0.49).abs() <= band, "{mean}");
}

#[test]
fn toxicr_map_shrinks_toward_prior_mean() {
    let d = embedded_dataset("dataset2").unwrap();
    let m = model("logistic");
    let prior = PriorSpec::built_in(PriorFamily::ToxicrInformative, m);
    let mle = prior.to_sampled(&maximize_likelihood(&d, m).unwrap().theta).unwrap();
    let map = maximize_posterior(&d, &prior).unwrap();
    for (j, marginal) in prior.marginals.iter().enumerate() {
        let mu = marginal.moments().0;
        assert!((map.as_slice()[j] - mu).abs() <= (mle.as_slice()[j] - mu).abs(), "coordinate {j}");
    }
}

#[test]
fn conjugate_laplace_by_hand() {
    // Mode 0.5, log-posterior curvature -40.
    let hand = (2.0 * std::f64::consts::PI / 40.0).sqrt() * 252.0 / 1024.0;
    assert!((oracle::analytic_laplace() - hand).abs() < 1e-12);
}

#[test]
fn reference_error_shrinks_at_root_n() {
    let d = DichotomousDataset::single_group(0.0, 10, 5).unwrap();
    let prior = oracle::oracle_prior();
    let a = ml_mc_reference(&d, &prior, 200_000, 1).mc_standard_error.unwrap();
    let b = ml_mc_reference(&d, &prior, 400_000, 1).mc_standard_error.unwrap();
    let ratio = b / a;
    assert!((ratio * 2f64.sqrt() - 1.0).abs() <= 0.2, "{ratio}");
}
