//! Laplace approximation at the MAP with finite-difference curvature.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::inference::{maximize_posterior_with, DichotomousDataset, OptimizerConfig, PosteriorTarget};
use crate::priors::PriorSpec;
use crate::special::LN_2PI;

use super::{MlEstimate, MlMethod};

/// Relative step `10^(-16/3)`, i.e. roughly the cube root of machine epsilon squared.
const REL_STEP: f64 = 4.641_588_833_612_779e-6;
const MIN_ABS_PARAM: f64 = 1e-300;

/// What the difference stencils are applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilMode {
    /// Differentiate `log f` directly.
    #[default]
    LogDensity,
    /// Differentiate `f = P(D|θ)P(θ)` on the linear scale and divide by
    /// `f(θ̂)`; loses precision when the step is tiny relative to `f`'s scale.
    Verbatim,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LaplaceConfig {
    pub stencil: StencilMode,
    pub optimizer: OptimizerConfig,
}

pub fn ml_laplace(dataset: &DichotomousDataset, prior: &PriorSpec) -> MlEstimate {
    ml_laplace_with(dataset, prior, LaplaceConfig::default())
}

/// Curvature of `g` at `x` by the 5-point diagonal and 4-point mixed stencils.
fn stencil_hessian(g: &dyn Fn(&[f64]) -> f64, x: &[f64], h: &[f64]) -> DMatrix<f64> {
    let q = x.len();
    let g0 = g(x);
    let mut hess = DMatrix::zeros(q, q);
    let mut p = x.to_vec();
    let mut at = |offsets: &[(usize, f64)]| -> f64 {
        p.copy_from_slice(x);
        for &(j, d) in offsets {
            p[j] += d;
        }
        g(&p)
    };
    for j in 0..q {
        let hj = h[j];
        let v = (-at(&[(j, 2.0 * hj)]) + 16.0 * at(&[(j, hj)]) - 30.0 * g0 + 16.0 * at(&[(j, -hj)]) - at(&[(j, -2.0 * hj)]))
            / (12.0 * hj * hj);
        hess[(j, j)] = v;
    }
    for a in 0..q {
        for b in a + 1..q {
            let (ha, hb) = (h[a], h[b]);
            let v = (at(&[(a, ha), (b, hb)]) - at(&[(a, ha), (b, -hb)]) - at(&[(a, -ha), (b, hb)]) + at(&[(a, -ha), (b, -hb)]))
                / (4.0 * ha * hb);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    hess
}

pub fn ml_laplace_with(dataset: &DichotomousDataset, prior: &PriorSpec, cfg: LaplaceConfig) -> MlEstimate {
    let fail = |reason: String| MlEstimate::failure(MlMethod::Laplace, prior.model, prior.family, reason);
    let (map, log_f_hat) = match maximize_posterior_with(dataset, prior, cfg.optimizer) {
        Ok(v) => v,
        Err(e) => return fail(e.to_string()),
    };
    laplace_at_mode(dataset, prior, &map.values, log_f_hat, cfg.stencil)
}

/// Laplace estimate around a given mode `theta` (sampled scale).
pub(crate) fn laplace_at_mode(
    dataset: &DichotomousDataset,
    prior: &PriorSpec,
    theta: &[f64],
    log_f_hat: f64,
    stencil: StencilMode,
) -> MlEstimate {
    let fail = |reason: String| MlEstimate::failure(MlMethod::Laplace, prior.model, prior.family, reason);
    if let Some(j) = theta.iter().position(|v| v.abs() < MIN_ABS_PARAM) {
        return fail(format!("zero finite-difference step for parameter {j}"));
    }
    let h: Vec<f64> = theta.iter().map(|v| v.abs() * REL_STEP).collect();
    let target = PosteriorTarget::new(dataset, prior);
    let log_f = |s: &[f64]| target.log_posterior(s);

    let neg_hess = match stencil {
        StencilMode::LogDensity => -stencil_hessian(&log_f, theta, &h),
        StencilMode::Verbatim => {
            let f_hat = log_f_hat.exp();
            if !(f_hat > 0.0) {
                return fail("posterior density underflows at the mode".into());
            }
            let f = |s: &[f64]| log_f(s).exp();
            -stencil_hessian(&f, theta, &h) / f_hat
        }
    };
    if neg_hess.iter().any(|v| !v.is_finite()) {
        return fail("non-finite curvature (stencil left the support)".into());
    }
    let eig = neg_hess.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.min();
    let max_eig = eig.eigenvalues.max();
    if !(min_eig > 0.0) {
        return fail(format!("negative Hessian not positive definite (min eigenvalue {min_eig:.3e})"));
    }
    let cond = max_eig / min_eig;
    if !(cond < 1e15) {
        return fail(format!("negative Hessian numerically singular (condition {cond:.3e})"));
    }
    let chol = match neg_hess.cholesky() {
        Some(c) => c,
        None => return fail("Cholesky factorisation of the negative Hessian failed".into()),
    };
    let log_det_neg_hess: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let q = theta.len() as f64;
    let log_ml = 0.5 * q * LN_2PI - 0.5 * log_det_neg_hess + log_f_hat;
    let mut est = MlEstimate::new(MlMethod::Laplace, prior.model, prior.family, log_ml)
        .with_meta("log_f_hat", log_f_hat)
        .with_meta("condition_number", cond);
    for (j, v) in theta.iter().enumerate() {
        est = est.with_meta(&format!("map_{j}"), *v);
    }
    est
}
