//! Posterior model probabilities and the model-averaged BMD distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::PosteriorSample;
use crate::marginal::{MlEstimate, MlMethod};
use crate::models::BmrSpec;
use crate::priors::ModelPriorProbabilities;

/// Slack on `F(x) ≥ q` so that weights summing to 1 only up to rounding
/// still hit exact step heights.
const CDF_SLACK: f64 = 1e-12;
/// Weight above which a model's censored BMD fraction is checked.
const CENSOR_WEIGHT: f64 = 0.01;
const CENSOR_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSource {
    Method(MlMethod),
    EqualWeight,
}

impl WeightSource {
    pub fn name(self) -> &'static str {
        match self {
            WeightSource::Method(m) => m.name(),
            WeightSource::EqualWeight => "equal-weight",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmaResult {
    pub weights: Vec<f64>,
    /// Per-model BMD draws; `+inf` marks draws whose BMD is unreachable.
    #[serde(skip)]
    pub bmd_draws_per_model: Vec<Vec<f64>>,
    pub bmd_estimate: f64,
    pub bmdl: f64,
    pub bmdu: Option<f64>,
    pub weight_source: WeightSource,
    pub warnings: Vec<String>,
}

/// Softmax of `log_ml + log P(M)` over the available entries; `None` entries get weight 0.
pub fn weights_from_log_ml(log_mls: &[Option<f64>], priors: &ModelPriorProbabilities) -> Result<Vec<f64>> {
    if priors.len() != log_mls.len() {
        return Err(Error::Input(format!("{} model prior probabilities for {} models", priors.len(), log_mls.len())));
    }
    let lp = priors.log_probabilities();
    let scores: Vec<f64> = log_mls
        .iter()
        .zip(&lp)
        .map(|(v, p)| match v {
            Some(v) if !v.is_nan() => v + p,
            _ => f64::NEG_INFINITY,
        })
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::NoModel);
    }
    if max == f64::INFINITY {
        return Err(Error::Input("infinite log marginal likelihood".into()));
    }
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.iter().map(|e| e / total).collect())
}

/// Posterior model probabilities from marginal-likelihood estimates; failed estimates get weight 0.
pub fn posterior_model_weights(mls: &[MlEstimate], priors: &ModelPriorProbabilities) -> Result<Vec<f64>> {
    let values: Vec<Option<f64>> = mls.iter().map(|e| e.log_ml()).collect();
    weights_from_log_ml(&values, priors)
}

/// BMD for every posterior draw of a sample.
pub fn bmd_draws(sample: &PosteriorSample, bmr: BmrSpec) -> Vec<f64> {
    let mut nat = vec![0.0; sample.dim];
    sample
        .iter()
        .map(|s| {
            sample.prior.to_natural_into(s, &mut nat);
            sample.model.bmd_draw(&nat, bmr)
        })
        .collect()
}

/// Finite draws sorted ascending, with the total count kept for the denominator.
struct Ecdf {
    finite: Vec<f64>,
    total: usize,
}

impl Ecdf {
    fn new(draws: &[f64]) -> Self {
        let mut finite: Vec<f64> = draws.iter().copied().filter(|v| v.is_finite()).collect();
        finite.sort_by(f64::total_cmp);
        Self { finite, total: draws.len() }
    }

    fn cdf(&self, x: f64) -> f64 {
        self.finite.partition_point(|&v| v <= x) as f64 / self.total as f64
    }
}

fn mixture_cdf(ecdfs: &[Ecdf], weights: &[f64], x: f64) -> f64 {
    ecdfs.iter().zip(weights).filter(|(_, &w)| w > 0.0).map(|(e, w)| w * e.cdf(x)).sum()
}

/// `inf { x : Σ w_k F_k(x) ≥ q }`, by bisection over the pooled finite draws.
/// Returns `+inf` when the censored mass keeps the mixture CDF below `q`.
fn mixture_quantile(ecdfs: &[Ecdf], weights: &[f64], support: &[f64], q: f64) -> f64 {
    if support.is_empty() || mixture_cdf(ecdfs, weights, support[support.len() - 1]) < q - CDF_SLACK {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0usize, support.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if mixture_cdf(ecdfs, weights, support[mid]) >= q - CDF_SLACK {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    support[lo]
}

/// Mixture quantiles of the per-model BMD posteriors at `quantiles`.
pub fn mixture_quantiles(bmd_draws_per_model: &[Vec<f64>], weights: &[f64], quantiles: &[f64]) -> Result<Vec<f64>> {
    if bmd_draws_per_model.len() != weights.len() {
        return Err(Error::Input(format!("{} weight(s) for {} model(s)", weights.len(), bmd_draws_per_model.len())));
    }
    if weights.iter().any(|w| !(0.0..=1.0 + 1e-12).contains(w)) {
        return Err(Error::Input("weights must lie in [0, 1]".into()));
    }
    for (k, (d, &w)) in bmd_draws_per_model.iter().zip(weights).enumerate() {
        if w > 0.0 && d.is_empty() {
            return Err(Error::Input(format!("model {k} has positive weight but no BMD draws")));
        }
    }
    let ecdfs: Vec<Ecdf> = bmd_draws_per_model.iter().map(|d| Ecdf::new(d)).collect();
    let mut support: Vec<f64> = ecdfs
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .flat_map(|(e, _)| e.finite.iter().copied())
        .collect();
    support.sort_by(f64::total_cmp);
    support.dedup();
    Ok(quantiles.iter().map(|&q| mixture_quantile(&ecdfs, weights, &support, q)).collect())
}

/// How per-model BMD posteriors are combined into one summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BmdSummary {
    /// Weight-averaged per-model quantiles: `Σ w_k Q_k(q)`.
    #[default]
    WeightedQuantiles,
    /// Quantiles of the mixture `Σ w_k F_k`.
    MixtureCdf,
}

impl BmdSummary {
    pub fn name(self) -> &'static str {
        match self {
            BmdSummary::WeightedQuantiles => "weighted-quantiles",
            BmdSummary::MixtureCdf => "mixture-cdf",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "weighted-quantiles" => Some(BmdSummary::WeightedQuantiles),
            "mixture-cdf" | "mixture" => Some(BmdSummary::MixtureCdf),
            _ => None,
        }
    }
}

fn check_weights(bmd_draws_per_model: &[Vec<f64>], weights: &[f64]) -> Result<()> {
    if bmd_draws_per_model.len() != weights.len() {
        return Err(Error::Input(format!("{} weight(s) for {} model(s)", weights.len(), bmd_draws_per_model.len())));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

fn censoring_warnings(bmd_draws_per_model: &[Vec<f64>], weights: &[f64]) -> Vec<String> {
    let mut warnings = Vec::new();
    for (k, (d, &w)) in bmd_draws_per_model.iter().zip(weights).enumerate() {
        if w > CENSOR_WEIGHT && !d.is_empty() {
            let censored = d.iter().filter(|v| !v.is_finite()).count() as f64 / d.len() as f64;
            if censored > CENSOR_FRACTION {
                warnings.push(format!("model {k} (weight {w:.3}): {:.1}% of BMD draws censored", 100.0 * censored));
            }
        }
    }
    warnings
}

fn assemble(bmd_draws_per_model: Vec<Vec<f64>>, weights: Vec<f64>, source: WeightSource, qs: [f64; 3]) -> BmaResult {
    let warnings = censoring_warnings(&bmd_draws_per_model, &weights);
    BmaResult {
        weights,
        bmd_draws_per_model,
        bmdl: qs[0],
        bmd_estimate: qs[1],
        bmdu: if qs[2].is_finite() { Some(qs[2]) } else { None },
        weight_source: source,
        warnings,
    }
}

/// Model-averaged BMD (median), BMDL (5th) and BMDU (95th percentile) of
/// the mixture posterior.
pub fn mix_bmd_posterior(bmd_draws_per_model: Vec<Vec<f64>>, weights: Vec<f64>, source: WeightSource) -> Result<BmaResult> {
    check_weights(&bmd_draws_per_model, &weights)?;
    let qs = mixture_quantiles(&bmd_draws_per_model, &weights, &[0.05, 0.5, 0.95])?;
    Ok(assemble(bmd_draws_per_model, weights, source, [qs[0], qs[1], qs[2]]))
}

/// Weighted average of each model's own BMD, BMDL and BMDU.
pub fn average_bmd_quantiles(bmd_draws_per_model: Vec<Vec<f64>>, weights: Vec<f64>, source: WeightSource) -> Result<BmaResult> {
    check_weights(&bmd_draws_per_model, &weights)?;
    let mut qs = [0.0; 3];
    for (k, (d, &w)) in bmd_draws_per_model.iter().zip(&weights).enumerate() {
        if w <= 0.0 {
            continue;
        }
        if d.is_empty() {
            return Err(Error::Input(format!("model {k} has positive weight but no BMD draws")));
        }
        let own = mixture_quantiles(std::slice::from_ref(d), &[1.0], &[0.05, 0.5, 0.95])?;
        for (acc, q) in qs.iter_mut().zip(own) {
            *acc += w * q;
        }
    }
    Ok(assemble(bmd_draws_per_model, weights, source, qs))
}

pub fn summarize_bmd(
    bmd_draws_per_model: Vec<Vec<f64>>,
    weights: Vec<f64>,
    source: WeightSource,
    summary: BmdSummary,
) -> Result<BmaResult> {
    match summary {
        BmdSummary::WeightedQuantiles => average_bmd_quantiles(bmd_draws_per_model, weights, source),
        BmdSummary::MixtureCdf => mix_bmd_posterior(bmd_draws_per_model, weights, source),
    }
}

/// Summary with every model weighted `1/K`.
pub fn equal_weight_result(bmd_draws_per_model: Vec<Vec<f64>>, summary: BmdSummary) -> Result<BmaResult> {
    let k = bmd_draws_per_model.len();
    if k == 0 {
        return Err(Error::NoModel);
    }
    summarize_bmd(bmd_draws_per_model, vec![1.0 / k as f64; k], WeightSource::EqualWeight, summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn quantile_of(draws: &[f64], q: f64) -> f64 {
        let mut v = draws.to_vec();
        v.sort_by(f64::total_cmp);
        let k = ((q * v.len() as f64 - 1e-9).ceil() as usize).max(1);
        v[k - 1]
    }

    #[test]
    fn equal_mls_give_uniform_weights() {
        let w = weights_from_log_ml(&[Some(-7.0); 8], &ModelPriorProbabilities::uniform(8)).unwrap();
        assert!(w.iter().all(|v| (v - 0.125).abs() < 1e-15));
    }

    #[test]
    fn reference_weights_from_tabulated_values() {
        // Dataset 1 / BBMD reference column (×1e-6).
        let ml = [32.5, 9.55, 0.0, 4.52, 0.01, 55.9, 26.5, 5.69];
        let logs: Vec<Option<f64>> = ml.iter().map(|v: &f64| Some((v * 1e-6).ln())).collect();
        let w = weights_from_log_ml(&logs, &ModelPriorProbabilities::uniform(8)).unwrap();
        // The printed MLs are rounded, so allow one percentage point.
        for (v, e) in w.iter().zip([24.0, 7.0, 0.0, 3.0, 0.0, 41.0, 20.0, 4.0]) {
            assert!((v * 100.0 - e).abs() <= 1.0, "{w:?}");
        }
    }

    #[test]
    fn failed_entries_get_zero_weight() {
        let w = weights_from_log_ml(&[Some(-1.0), None, Some(-1.0)], &ModelPriorProbabilities::uniform(3)).unwrap();
        assert_eq!(w[1], 0.0);
        assert!((w[0] - 0.5).abs() < 1e-15);
        assert!(matches!(weights_from_log_ml(&[None, None], &ModelPriorProbabilities::uniform(2)), Err(Error::NoModel)));
    }

    #[test]
    fn two_atom_median_takes_infimum() {
        let r = mix_bmd_posterior(vec![vec![1.0; 10], vec![3.0; 10]], vec![0.5, 0.5], WeightSource::EqualWeight).unwrap();
        assert_eq!(r.bmd_estimate, 1.0);
        assert_eq!(r.bmdl, 1.0);
        assert_eq!(r.bmdu, Some(3.0));
    }

    #[test]
    fn single_model_matches_empirical_quantiles() {
        let draws: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 / 100.0).collect();
        let r = mix_bmd_posterior(vec![draws.clone()], vec![1.0], WeightSource::EqualWeight).unwrap();
        assert_eq!(r.bmd_estimate, quantile_of(&draws, 0.5));
        assert_eq!(r.bmdl, quantile_of(&draws, 0.05));
        for summary in [BmdSummary::WeightedQuantiles, BmdSummary::MixtureCdf] {
            let e = equal_weight_result(vec![draws.clone()], summary).unwrap();
            assert_eq!(e.bmd_estimate, r.bmd_estimate);
            assert_eq!(e.bmdl, r.bmdl);
        }
    }

    #[test]
    fn weighted_quantiles_average_per_model_summaries() {
        let a: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let b: Vec<f64> = (1..=100).map(|i| 1000.0 + i as f64).collect();
        let r = average_bmd_quantiles(vec![a, b], vec![0.25, 0.75], WeightSource::EqualWeight).unwrap();
        assert!((r.bmd_estimate - (0.25 * 50.0 + 0.75 * 1050.0)).abs() < 1e-12);
        assert!((r.bmdl - (0.25 * 5.0 + 0.75 * 1005.0)).abs() < 1e-12);
        assert!((r.bmdu.unwrap() - (0.25 * 95.0 + 0.75 * 1095.0)).abs() < 1e-12);
    }

    #[test]
    fn censored_draws_only_in_denominator() {
        let mut d = vec![1.0; 80];
        d.extend(vec![f64::INFINITY; 20]);
        let r = mix_bmd_posterior(vec![d], vec![1.0], WeightSource::EqualWeight).unwrap();
        assert_eq!(r.bmd_estimate, 1.0);
        assert_eq!(r.bmdu, None);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn zero_weight_models_are_ignored() {
        let r = mix_bmd_posterior(vec![vec![2.0; 5], vec![f64::INFINITY; 5]], vec![1.0, 0.0], WeightSource::EqualWeight).unwrap();
        assert_eq!(r.bmd_estimate, 2.0);
        assert!(r.warnings.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn weights_are_a_distribution_and_shift_invariant(
            logs in prop::collection::vec(-800.0..0.0f64, 1..10),
            shift in -500.0..500.0f64,
        ) {
            let pri = ModelPriorProbabilities::uniform(logs.len());
            let a: Vec<Option<f64>> = logs.iter().map(|v| Some(*v)).collect();
            let b: Vec<Option<f64>> = logs.iter().map(|v| Some(v + shift)).collect();
            let wa = weights_from_log_ml(&a, &pri).unwrap();
            let wb = weights_from_log_ml(&b, &pri).unwrap();
            prop_assert!((wa.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (x, y) in wa.iter().zip(&wb) {
                prop_assert!((0.0..=1.0).contains(x));
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn mixture_quantiles_monotone_and_calibrated(
            draws in prop::collection::vec(prop::collection::vec(0.01..10.0f64, 50..200), 1..4),
            raw_w in prop::collection::vec(0.01..1.0f64, 4),
        ) {
            let k = draws.len();
            let total: f64 = raw_w[..k].iter().sum();
            let w: Vec<f64> = raw_w[..k].iter().map(|v| v / total).collect();
            let qs = [0.05, 0.25, 0.5, 0.75, 0.95];
            let out = mixture_quantiles(&draws, &w, &qs).unwrap();
            prop_assert!(out.windows(2).all(|p| p[0] <= p[1]));
            let ecdfs: Vec<Ecdf> = draws.iter().map(|d| Ecdf::new(d)).collect();
            let n: usize = draws.iter().map(|d| d.len()).sum();
            for (q, x) in qs.iter().zip(&out) {
                let f = mixture_cdf(&ecdfs, &w, *x);
                prop_assert!(f >= q - CDF_SLACK);
                prop_assert!(f - q <= 1.0 / (n as f64).sqrt());
            }
        }

        #[test]
        fn identical_draws_ignore_weights(
            d in prop::collection::vec(0.01..10.0f64, 20..100),
            raw_w in prop::collection::vec(0.01..1.0f64, 3),
        ) {
            let total: f64 = raw_w.iter().sum();
            let w: Vec<f64> = raw_w.iter().map(|v| v / total).collect();
            let out = mixture_quantiles(&vec![d.clone(); 3], &w, &[0.05, 0.5, 0.95]).unwrap();
            prop_assert_eq!(out[0], quantile_of(&d, 0.05));
            prop_assert_eq!(out[1], quantile_of(&d, 0.5));
            prop_assert_eq!(out[2], quantile_of(&d, 0.95));
        }
    }
}
