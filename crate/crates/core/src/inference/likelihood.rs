use crate::error::Result;
use crate::models::{ModelFamily, ParamVector, Scale};
use crate::priors::PriorSpec;

use super::{DichotomousDataset, MAX_PARAMS};

/// Binomial log-likelihood at a natural-scale parameter vector.
pub fn log_likelihood(dataset: &DichotomousDataset, model: ModelFamily, theta: &ParamVector) -> Result<f64> {
    if theta.scale != Scale::Natural {
        return Err(crate::Error::Input("log_likelihood expects a natural-scale vector".into()));
    }
    model.validate(&theta.values)?;
    Ok(log_likelihood_unchecked(dataset, model, &theta.values))
}

/// Binomial log-likelihood for a natural-scale slice that already satisfies
/// the model constraints. `0 · ln 0` is taken as 0.
#[inline]
pub fn log_likelihood_unchecked(dataset: &DichotomousDataset, model: ModelFamily, theta: &[f64]) -> f64 {
    let mut total = 0.0;
    for (g, c) in dataset.groups().iter().zip(dataset.ln_binomials()) {
        let (lp, lq) = model.log_response(theta, g.dose);
        total += c;
        if g.y > 0 {
            total += g.y as f64 * lp;
        }
        if g.y < g.n {
            total += (g.n - g.y) as f64 * lq;
        }
    }
    if total.is_nan() {
        f64::NEG_INFINITY
    } else {
        total
    }
}

/// Unnormalised posterior of one `(dataset, model, prior)` cell on the
/// prior's sampled scale.
#[derive(Debug, Clone, Copy)]
pub struct PosteriorTarget<'a> {
    pub dataset: &'a DichotomousDataset,
    pub model: ModelFamily,
    pub prior: &'a PriorSpec,
}

impl<'a> PosteriorTarget<'a> {
    pub fn new(dataset: &'a DichotomousDataset, prior: &'a PriorSpec) -> Self {
        Self { dataset, model: prior.model, prior }
    }

    pub fn dim(&self) -> usize {
        self.prior.n_params()
    }

    /// Log-likelihood at a sampled-scale point; `-inf` when the mapped
    /// natural parameters violate the model constraints.
    #[inline]
    pub fn log_likelihood(&self, sampled: &[f64]) -> f64 {
        let mut nat = [0.0; MAX_PARAMS];
        let nat = &mut nat[..sampled.len()];
        self.prior.to_natural_into(sampled, nat);
        if !self.model.constraints().iter().zip(nat.iter()).all(|(c, &x)| c.admits(x)) {
            return f64::NEG_INFINITY;
        }
        log_likelihood_unchecked(self.dataset, self.model, nat)
    }

    #[inline]
    pub fn log_prior(&self, sampled: &[f64]) -> f64 {
        self.prior.log_density(sampled)
    }

    /// `ln P(D | θ) + ln P(θ)`, skipping the likelihood outside the prior support.
    #[inline]
    pub fn log_posterior(&self, sampled: &[f64]) -> f64 {
        let lp = self.log_prior(sampled);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        lp + self.log_likelihood(sampled)
    }

    /// Both terms, for callers that store the likelihood separately.
    #[inline]
    pub fn log_terms(&self, sampled: &[f64]) -> (f64, f64) {
        let lp = self.log_prior(sampled);
        if lp == f64::NEG_INFINITY {
            return (f64::NEG_INFINITY, lp);
        }
        (self.log_likelihood(sampled), lp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::DoseGroup;

    fn nat(v: &[f64]) -> ParamVector {
        ParamVector::natural(v.to_vec())
    }

    #[test]
    fn single_group_examples() {
        let d = DichotomousDataset::single_group(0.0, 10, 0).unwrap();
        assert_eq!(log_likelihood(&d, ModelFamily::Constant, &nat(&[0.0])).unwrap(), 0.0);
        let d = DichotomousDataset::single_group(0.0, 10, 5).unwrap();
        let v = log_likelihood(&d, ModelFamily::Constant, &nat(&[0.5])).unwrap();
        assert!((v - (252f64.ln() - 10.0 * 2f64.ln())).abs() < 1e-12);
        assert!((v - (252f64.ln() - 10.0 * 2f64.ln())).abs() < 1e-12 && (v + 1.402043).abs() < 1e-6);
        assert_eq!(log_likelihood(&d, ModelFamily::Constant, &nat(&[0.0])).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn dataset1_logistic_matches_direct_sum() {
        let groups = [(0.0, 15u64, 0u64), (0.25, 30, 5), (0.5, 29, 26), (1.0, 16, 16)];
        let d = DichotomousDataset::new(
            "d1",
            groups.iter().map(|&(dose, n, y)| DoseGroup { dose, n, y }).collect(),
        )
        .unwrap();
        // Brute force with an explicit product for the binomial coefficient.
        let choose = |n: u64, k: u64| -> f64 { (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum() };
        let direct: f64 = groups
            .iter()
            .map(|&(dose, n, y)| {
                let p = 1.0 / (1.0 + (-dose as f64).exp());
                choose(n, y) + y as f64 * p.ln() + (n - y) as f64 * (1.0 - p).ln()
            })
            .sum();
        let v = log_likelihood(&d, ModelFamily::Logistic, &nat(&[0.0, 1.0])).unwrap();
        assert!((v - direct).abs() < 1e-10, "{v} vs {direct}");
    }

    #[test]
    fn additivity_over_groups() {
        let d = DichotomousDataset::from_csv_str("t", "0,20,1\n0.25,20,2\n0.5,20,5\n1,20,11").unwrap();
        for m in ModelFamily::PAPER_SET {
            let theta: Vec<f64> = match m.n_params() {
                2 => vec![0.7, 0.2],
                3 => vec![0.9, 1.3, 0.05],
                _ => vec![0.4, 1.2, 0.05, 0.9],
            };
            let theta = if m == ModelFamily::Logistic || m == ModelFamily::Probit { vec![-1.5, 2.0] } else { theta };
            let whole = log_likelihood(&d, m, &nat(&theta)).unwrap();
            let parts: f64 = d.split_groups().iter().map(|g| log_likelihood(g, m, &nat(&theta)).unwrap()).sum();
            assert!((whole - parts).abs() < 1e-12, "{m}");
        }
    }
}
