//! Self-tests on the constant-response model with `p ~ Unif(0, 1)`.
//!
//! For one group of `n` animals with `y` responders the posterior is
//! `Beta(y + 1, n − y + 1)` and the marginal likelihood is `1 / (n + 1)`.

use serde::Serialize;
use statrs::function::beta::{beta_reg, ln_beta};

use crate::inference::{sample_posterior, DichotomousDataset, McmcConfig};
use crate::marginal::{ml_bridge_sampling, ml_density_estimation_at, ml_laplace, ml_mc_reference, MlEstimate};
use crate::models::ModelFamily;
use crate::priors::{Marginal, PriorFamily, PriorSpec};

pub const ORACLE_N: u64 = 10;
pub const ORACLE_Y: u64 = 5;
/// SE multiple for the Monte Carlo methods.
pub const SE_MULTIPLE: f64 = 3.0;
/// Relative tolerance of the Laplace check against its hand-derived value.
pub const LAPLACE_REL_TOL: f64 = 0.01;
pub const DENSITY_ABS_TOL: f64 = 1e-10;
pub const KS_ALPHA: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCheck {
    pub name: String,
    pub value: f64,
    pub expected: f64,
    /// Absolute tolerance actually applied.
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

impl OracleCheck {
    fn new(name: &str, value: f64, expected: f64, tolerance: f64, detail: String) -> Self {
        let pass = (value - expected).abs() <= tolerance;
        Self { name: name.into(), value, expected, tolerance, pass, detail }
    }
}

pub fn oracle_prior() -> PriorSpec {
    PriorSpec {
        family: PriorFamily::Custom,
        model: ModelFamily::Constant,
        marginals: vec![Marginal::Uniform { lower: 0.0, upper: 1.0 }],
    }
}

pub fn oracle_dataset() -> DichotomousDataset {
    DichotomousDataset::single_group(0.0, ORACLE_N, ORACLE_Y).expect("valid group")
}

pub fn analytic_ml() -> f64 {
    1.0 / (ORACLE_N + 1) as f64
}

/// Laplace value by hand: `C(n,y) p̂^y (1−p̂)^(n−y) · sqrt(2π / H)` with
/// `p̂ = y/n` and `H = y/p̂² + (n−y)/(1−p̂)²`.
pub fn analytic_laplace() -> f64 {
    let (n, y) = (ORACLE_N as f64, ORACLE_Y as f64);
    let p = y / n;
    let f_hat = crate::special::ln_choose(ORACLE_N, ORACLE_Y) + y * p.ln() + (n - y) * (1.0 - p).ln();
    let h = y / (p * p) + (n - y) / ((1.0 - p) * (1.0 - p));
    f_hat.exp() * (2.0 * std::f64::consts::PI / h).sqrt()
}

fn se_check(name: &str, est: &MlEstimate) -> OracleCheck {
    let expected = analytic_ml();
    match (est.log_ml(), est.mc_standard_error) {
        (Some(l), Some(se)) => {
            let ml = l.exp();
            // Delta method: SE of the ML is ml × SE(log ml).
            let tol = SE_MULTIPLE * ml * se;
            OracleCheck::new(name, ml, expected, tol, format!("log-scale SE {se:.3e}"))
        }
        _ => OracleCheck { name: name.into(), value: f64::NAN, expected, tolerance: 0.0, pass: false, detail: format!("{:?}", est.value) },
    }
}

/// Kolmogorov distribution tail `P(K > x)`.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample KS statistic of `xs` against `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Run the conjugate checks with the given reference size and sampler settings.
pub fn run_oracles(reference_samples: usize, mcmc: &McmcConfig) -> Vec<OracleCheck> {
    let data = oracle_dataset();
    let prior = oracle_prior();
    let (a, b) = ((ORACLE_Y + 1) as f64, (ORACLE_N - ORACLE_Y + 1) as f64);
    let mut out = Vec::new();

    out.push(se_check("reference", &ml_mc_reference(&data, &prior, reference_samples, mcmc.seed)));

    let lap = ml_laplace(&data, &prior);
    let want = analytic_laplace();
    out.push(OracleCheck::new(
        "laplace",
        lap.log_ml().map_or(f64::NAN, f64::exp),
        want,
        LAPLACE_REL_TOL * want,
        "relative to the analytic Laplace value".into(),
    ));

    let log_beta_pdf = |x: &[f64]| (a - 1.0) * x[0].ln() + (b - 1.0) * (1.0 - x[0]).ln() - ln_beta(a, b);
    let dens = ml_density_estimation_at(&data, &prior, &[a / (a + b)], log_beta_pdf);
    out.push(OracleCheck::new(
        "density-analytic",
        dens.log_ml().map_or(f64::NAN, f64::exp),
        analytic_ml(),
        DENSITY_ABS_TOL,
        "exact posterior density substituted for the KDE".into(),
    ));

    match sample_posterior(&data, &prior, mcmc) {
        Ok(sample) => {
            out.push(se_check("bridge", &ml_bridge_sampling(&data, &prior, &sample)));
            let xs: Vec<f64> = sample.iter().map(|s| s[0]).collect();
            let d = ks_statistic(&xs, |x| beta_reg(a, b, x.clamp(0.0, 1.0)));
            let p = kolmogorov_survival(d * (xs.len() as f64).sqrt());
            out.push(OracleCheck {
                name: "mcmc-ks".into(),
                value: p,
                expected: 1.0,
                tolerance: 1.0 - KS_ALPHA,
                pass: p >= KS_ALPHA,
                detail: format!("D = {d:.5} over {} draws", xs.len()),
            });
        }
        Err(e) => out.push(OracleCheck {
            name: "mcmc".into(),
            value: f64::NAN,
            expected: 1.0,
            tolerance: 0.0,
            pass: false,
            detail: e.to_string(),
        }),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert!((analytic_laplace() - 0.097_535).abs() < 1e-6);
        assert_eq!(analytic_ml(), 1.0 / 11.0);
    }

    #[test]
    fn kolmogorov_tail() {
        // Critical values of the asymptotic distribution.
        assert!((kolmogorov_survival(1.358_1) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.949_6) - 0.001).abs() < 1e-5);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn ks_statistic_of_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_statistic(&xs, |x| x) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn all_oracles_pass() {
        for c in run_oracles(1_000_000, &McmcConfig::default()) {
            assert!(c.pass, "{c:?}");
        }
    }
}
