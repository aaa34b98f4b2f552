//! Prior-sampling Monte Carlo reference for the marginal likelihood.

use rayon::prelude::*;

use crate::inference::{DichotomousDataset, PosteriorTarget};
use crate::priors::PriorSpec;
use crate::rng::{derive_seed, rng_from_seed};
use crate::special::LogSumExp;

use super::{MlEstimate, MlMethod};

const MIN_BATCH: usize = 1000;
const MAX_BATCH: usize = 1 << 16;
const TARGET_BATCHES: usize = 1000;

pub fn ml_mc_reference(dataset: &DichotomousDataset, prior: &PriorSpec, n_samples: usize, seed: u64) -> MlEstimate {
    let batch = (n_samples / TARGET_BATCHES).clamp(MIN_BATCH, MAX_BATCH);
    ml_mc_reference_with_batch(dataset, prior, n_samples, seed, batch)
}

/// `log((1/N) Σ P(D|θ_i))` over `θ_i` drawn from the prior in batches of
/// `batch`, each batch with its own derived seed. The standard error is the
/// batch-means estimate, reported on the log scale.
pub fn ml_mc_reference_with_batch(dataset: &DichotomousDataset, prior: &PriorSpec, n_samples: usize, seed: u64, batch: usize) -> MlEstimate {
    let model = prior.model;
    let fail = |r: &str| MlEstimate::failure(MlMethod::McReference, model, prior.family, r);
    if n_samples == 0 || batch == 0 {
        return fail("no samples requested");
    }
    let target = PosteriorTarget::new(dataset, prior);
    let sampler = prior.sampler();
    let n_batches = n_samples.div_ceil(batch);
    let stream = derive_seed(seed, &[model as u64, 0x7265_66]);
    let sums: Vec<(LogSumExp, usize)> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let size = batch.min(n_samples - b * batch);
            let mut rng = rng_from_seed(derive_seed(stream, &[b as u64]));
            let mut s = vec![0.0; prior.n_params()];
            let mut acc = LogSumExp::default();
            for _ in 0..size {
                sampler.draw_into(&mut rng, &mut s);
                acc.push(target.log_likelihood(&s));
            }
            (acc, size)
        })
        .collect();

    let mut total = LogSumExp::default();
    for (s, _) in &sums {
        total.merge(s);
    }
    let log_sum = total.value();
    if log_sum == f64::NEG_INFINITY {
        return fail("all sampled likelihoods are zero");
    }
    let log_ml = log_sum - (n_samples as f64).ln();

    // Batch means relative to the overall mean.
    let se = if sums.len() >= 2 {
        let n = n_samples as f64;
        let ratios: Vec<(f64, f64)> = sums
            .iter()
            .map(|(s, k)| {
                let v = s.value();
                let m = if v == f64::NEG_INFINITY { 0.0 } else { (v - (*k as f64).ln() - log_ml).exp() };
                (m, *k as f64)
            })
            .collect();
        let var_bm = ratios.iter().map(|(m, k)| k * (m - 1.0).powi(2)).sum::<f64>() / (ratios.len() as f64 - 1.0);
        (var_bm / n).sqrt()
    } else {
        f64::NAN
    };
    MlEstimate::new(MlMethod::McReference, model, prior.family, log_ml)
        .with_se(se)
        .with_meta("n_samples", n_samples as f64)
        .with_meta("batch_size", batch as f64)
}
