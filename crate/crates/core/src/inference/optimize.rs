//! Multi-start Nelder–Mead maximisation of the likelihood and the posterior.

use crate::error::{Error, Result};
use crate::models::{Constraint, ModelFamily, ParamVector};
use crate::priors::{PriorFamily, PriorSpec};
use crate::rng::derive_seed;
use crate::special::{expit, logit};

use super::{log_likelihood_unchecked, DichotomousDataset, PosteriorTarget};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Stop when the simplex spread in function value drops below this.
    pub f_tol: f64,
    /// ... and the simplex diameter drops below this.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 4000, f_tol: 1e-13, x_tol: 1e-11 }
    }
}

/// Minimise `f` from `x0` with initial simplex edge lengths `steps`.
/// Returns the best vertex and its value; `+inf` values are allowed and
/// treated as infeasible.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], steps: &[f64], opts: NelderMeadOptions) -> (Vec<f64>, f64) {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let mut evals = n + 1;
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut centroid = vec![0.0; n];
    let point = |c: &[f64], w: &[f64], t: f64| -> Vec<f64> { c.iter().zip(w).map(|(ci, wi)| ci + t * (wi - ci)).collect() };

    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= opts.f_tol && diameter <= opts.x_tol * (1.0 + simplex[0].iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for x in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = point(&centroid, &worst, -alpha);
        let fr = eval(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = point(&centroid, &worst, -gamma);
            let fe = eval(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = point(&centroid, &xr, rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = point(&centroid, &worst, rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = point(&best, &simplex[i], sigma);
            values[i] = eval(&simplex[i]);
        }
        evals += n;
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    (simplex[best].clone(), values[best])
}

/// Repeated Nelder–Mead restarts from the incumbent until the improvement stalls.
fn polish(f: &dyn Fn(&[f64]) -> f64, x0: Vec<f64>, f0: f64, steps: &[f64]) -> (Vec<f64>, f64) {
    let (mut x, mut fx) = (x0, f0);
    let mut scale = 1.0;
    for _ in 0..6 {
        let s: Vec<f64> = steps.iter().map(|v| v * scale).collect();
        let (nx, nf) = nelder_mead(f, &x, &s, NelderMeadOptions::default());
        let gain = fx - nf;
        if nf <= fx {
            x = nx;
            fx = nf;
        }
        if !(gain > 1e-12) {
            break;
        }
        scale *= 0.5;
    }
    (x, fx)
}

/// Multi-start settings shared by the ML and MAP optimisers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { starts: 20, seed: 0x6d6c_655f_7374_6172 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub theta: ParamVector,
    pub log_likelihood: f64,
}

fn to_free(c: Constraint, x: f64) -> f64 {
    match c {
        Constraint::Real => x,
        Constraint::Positive => x.max(1e-300).ln(),
        Constraint::Unit => logit(x.clamp(1e-12, 1.0 - 1e-12)),
    }
}

fn from_free(c: Constraint, u: f64) -> f64 {
    match c {
        Constraint::Real => u,
        Constraint::Positive => u.exp(),
        Constraint::Unit => expit(u),
    }
}

/// Maximum-likelihood fit with the default multi-start settings.
pub fn maximize_likelihood(dataset: &DichotomousDataset, model: ModelFamily) -> Result<MleFit> {
    maximize_likelihood_with(dataset, model, OptimizerConfig::default())
}

/// Maximum-likelihood fit over the natural constraint set.
///
/// Starts are drawn from the BBMD uniform prior; the simplex runs on an
/// unconstrained reparameterisation (log for positive, logit for unit
/// parameters), so boundary maxima are approached from the interior.
pub fn maximize_likelihood_with(dataset: &DichotomousDataset, model: ModelFamily, cfg: OptimizerConfig) -> Result<MleFit> {
    let cons = model.constraints();
    let box_prior = PriorSpec::built_in(PriorFamily::BbmdUniform, model);
    let objective = |u: &[f64]| -> f64 {
        let nat: Vec<f64> = cons.iter().zip(u).map(|(&c, &v)| from_free(c, v)).collect();
        if !cons.iter().zip(&nat).all(|(c, &x)| c.admits(x)) {
            return f64::INFINITY;
        }
        -log_likelihood_unchecked(dataset, model, &nat)
    };
    let starts = box_prior.sample_prior(derive_seed(cfg.seed, &[model as u64, 1]), cfg.starts.max(1));
    let steps = vec![0.5; model.n_params()];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let mut nat = vec![0.0; start.len()];
        box_prior.to_natural_into(&start, &mut nat);
        let u0: Vec<f64> = cons.iter().zip(&nat).map(|(&c, &x)| to_free(c, x)).collect();
        let f0 = objective(&u0);
        if !f0.is_finite() {
            continue;
        }
        let (u, fu) = polish(&objective, u0, f0, &steps);
        if best.as_ref().is_none_or(|(_, b)| fu < *b) {
            best = Some((u, fu));
        }
    }
    let (u, fu) = best.ok_or_else(|| Error::OptimizationFailure(format!("no start of {model} had a finite likelihood")))?;
    if !fu.is_finite() {
        return Err(Error::OptimizationFailure(format!("{model}: likelihood diverged")));
    }
    let theta: Vec<f64> = cons.iter().zip(&u).map(|(&c, &v)| from_free(c, v)).collect();
    Ok(MleFit { theta: ParamVector::natural(theta), log_likelihood: -fu })
}

/// MAP estimate with the default multi-start settings.
pub fn maximize_posterior(dataset: &DichotomousDataset, prior: &PriorSpec) -> Result<ParamVector> {
    maximize_posterior_with(dataset, prior, OptimizerConfig::default()).map(|(theta, _)| theta)
}

/// MAP estimate on the prior's sampled scale, returned with its log posterior.
///
/// Starts are drawn from the prior itself; the simplex operates directly on
/// the sampled coordinates with out-of-support points treated as infeasible.
pub fn maximize_posterior_with(
    dataset: &DichotomousDataset,
    prior: &PriorSpec,
    cfg: OptimizerConfig,
) -> Result<(ParamVector, f64)> {
    let target = PosteriorTarget::new(dataset, prior);
    let objective = |s: &[f64]| -target.log_posterior(s);
    let starts = prior.sample_prior(derive_seed(cfg.seed, &[prior.model as u64, 2]), cfg.starts.max(1));
    let steps: Vec<f64> = prior.marginals.iter().map(|m| 0.05 * m.moments().1.sqrt()).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let f0 = objective(&start);
        if !f0.is_finite() {
            continue;
        }
        let (s, fs) = polish(&objective, start, f0, &steps);
        if best.as_ref().is_none_or(|(_, b)| fs < *b) {
            best = Some((s, fs));
        }
    }
    match best {
        Some((s, fs)) if fs.is_finite() => Ok((ParamVector::sampled(s), -fs)),
        _ => Err(Error::NoSupport),
    }
}
