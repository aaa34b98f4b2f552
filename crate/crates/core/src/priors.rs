//! Parameter priors.
//!
//! Each model parameter carries one univariate [`Marginal`]. A marginal is a
//! density on the parameter's *sampled* coordinate together with the map back
//! to the natural scale: `LogNormal(μ, σ)` is a normal density on `ln x`,
//! `LogitNormal` and `LogitUniform` live on `logit x`, the remaining marginals
//! use the natural coordinate directly. Densities are evaluated on the sampled
//! coordinate without a Jacobian; sampling, optimisation, KDE and bridge
//! sampling all operate on that same scale, so the marginal likelihood is
//! unchanged. All second parameters of normal-type marginals are standard
//! deviations and gamma marginals use shape–rate.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::models::{ModelFamily, ParamVector, Scale};
use crate::rng::{rng_from_seed, Rng};
use crate::special::{expit, logit, norm_cdf, norm_log_pdf};

/// Map from the sampled coordinate to the natural parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    Log,
    Logit,
}

impl Transform {
    #[inline]
    pub fn to_natural(self, s: f64) -> f64 {
        match self {
            Transform::Identity => s,
            Transform::Log => s.exp(),
            Transform::Logit => expit(s),
        }
    }

    pub fn to_sampled(self, x: f64) -> Result<f64> {
        match self {
            Transform::Identity => Ok(x),
            Transform::Log if x > 0.0 && x.is_finite() => Ok(x.ln()),
            Transform::Logit if x > 0.0 && x < 1.0 => Ok(logit(x)),
            Transform::Log => Err(Error::Boundary(format!("log transform needs x > 0, got {x}"))),
            Transform::Logit => Err(Error::Boundary(format!("logit transform needs 0 < x < 1, got {x}"))),
        }
    }
}

/// A univariate prior marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "kebab-case")]
pub enum Marginal {
    Uniform { lower: f64, upper: f64 },
    /// Uniform on `logit x`.
    LogitUniform { lower: f64, upper: f64 },
    Normal { mu: f64, sigma: f64 },
    /// Normal on `ln x`.
    LogNormal { mu: f64, sigma: f64 },
    /// Normal on `logit x`.
    LogitNormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, rate: f64 },
    Beta { a: f64, b: f64 },
}

impl Marginal {
    pub fn transform(&self) -> Transform {
        match self {
            Marginal::LogNormal { .. } => Transform::Log,
            Marginal::LogitNormal { .. } | Marginal::LogitUniform { .. } => Transform::Logit,
            _ => Transform::Identity,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Uniform { lower, upper } | Marginal::LogitUniform { lower, upper } => {
                lower.is_finite() && upper.is_finite() && lower < upper
            }
            Marginal::Normal { mu, sigma } | Marginal::LogNormal { mu, sigma } | Marginal::LogitNormal { mu, sigma } => {
                mu.is_finite() && sigma.is_finite() && sigma > 0.0
            }
            Marginal::Gamma { shape, rate } => shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
            Marginal::Beta { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Prior(format!("invalid hyperparameters in {self:?}")))
        }
    }

    /// Log density of the sampled coordinate; `-inf` outside the support.
    #[inline]
    pub fn log_density(&self, s: f64) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } | Marginal::LogitUniform { lower, upper } => {
                if s >= lower && s <= upper {
                    -(upper - lower).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Marginal::Normal { mu, sigma } | Marginal::LogNormal { mu, sigma } | Marginal::LogitNormal { mu, sigma } => {
                if s.is_finite() {
                    norm_log_pdf(s, mu, sigma)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Marginal::Gamma { shape, rate } => {
                if s > 0.0 && s.is_finite() {
                    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * s.ln() - rate * s
                } else {
                    f64::NEG_INFINITY
                }
            }
            Marginal::Beta { a, b } => {
                if s > 0.0 && s < 1.0 {
                    (a - 1.0) * s.ln() + (b - 1.0) * (-s).ln_1p() - ln_beta(a, b)
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// CDF of the sampled coordinate.
    pub fn cdf(&self, s: f64) -> f64 {
        match *self {
            Marginal::Uniform { lower, upper } | Marginal::LogitUniform { lower, upper } => {
                ((s - lower) / (upper - lower)).clamp(0.0, 1.0)
            }
            Marginal::Normal { mu, sigma } | Marginal::LogNormal { mu, sigma } | Marginal::LogitNormal { mu, sigma } => {
                norm_cdf((s - mu) / sigma)
            }
            Marginal::Gamma { shape, rate } => {
                if s <= 0.0 {
                    0.0
                } else {
                    statrs::function::gamma::gamma_lr(shape, rate * s)
                }
            }
            Marginal::Beta { a, b } => {
                if s <= 0.0 {
                    0.0
                } else if s >= 1.0 {
                    1.0
                } else {
                    statrs::function::beta::beta_reg(a, b, s)
                }
            }
        }
    }

    /// Sampled-coordinate support as a closed interval (possibly infinite).
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lower, upper } | Marginal::LogitUniform { lower, upper } => (lower, upper),
            Marginal::Gamma { .. } => (0.0, f64::INFINITY),
            Marginal::Beta { .. } => (0.0, 1.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Mean and variance of the sampled coordinate.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lower, upper } | Marginal::LogitUniform { lower, upper } => {
                (0.5 * (lower + upper), (upper - lower).powi(2) / 12.0)
            }
            Marginal::Normal { mu, sigma } | Marginal::LogNormal { mu, sigma } | Marginal::LogitNormal { mu, sigma } => {
                (mu, sigma * sigma)
            }
            Marginal::Gamma { shape, rate } => (shape / rate, shape / (rate * rate)),
            Marginal::Beta { a, b } => (a / (a + b), a * b / ((a + b).powi(2) * (a + b + 1.0))),
        }
    }

    /// Median of the sampled coordinate where it has a closed form, else the mean.
    pub fn center(&self) -> f64 {
        match *self {
            Marginal::Normal { mu, .. } | Marginal::LogNormal { mu, .. } | Marginal::LogitNormal { mu, .. } => mu,
            _ => self.moments().0,
        }
    }

    fn sampler(&self) -> MarginalSampler {
        match *self {
            Marginal::Uniform { lower, upper } | Marginal::LogitUniform { lower, upper } => {
                MarginalSampler::Uniform { lower, width: upper - lower }
            }
            Marginal::Normal { mu, sigma } | Marginal::LogNormal { mu, sigma } | Marginal::LogitNormal { mu, sigma } => {
                MarginalSampler::Normal { mu, sigma }
            }
            Marginal::Gamma { shape, rate } => {
                MarginalSampler::Gamma(rand_distr::Gamma::new(shape, 1.0 / rate).expect("validated gamma"))
            }
            Marginal::Beta { a, b } => MarginalSampler::Beta(rand_distr::Beta::new(a, b).expect("validated beta")),
        }
    }
}

#[derive(Debug, Clone)]
enum MarginalSampler {
    Uniform { lower: f64, width: f64 },
    Normal { mu: f64, sigma: f64 },
    Gamma(rand_distr::Gamma<f64>),
    Beta(rand_distr::Beta<f64>),
}

impl MarginalSampler {
    #[inline]
    fn draw(&self, rng: &mut Rng) -> f64 {
        match self {
            MarginalSampler::Uniform { lower, width } => lower + width * rng.random::<f64>(),
            MarginalSampler::Normal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + sigma * z
            }
            MarginalSampler::Gamma(g) => g.sample(rng),
            MarginalSampler::Beta(b) => b.sample(rng),
        }
    }
}

/// Named prior families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorFamily {
    /// BBMD default non-informative uniform priors.
    BbmdUniform,
    /// ToxicR default informative priors.
    ToxicrInformative,
    /// Informative priors fitted to historical dose-response data.
    DataBasedInformative,
    /// User-supplied marginals.
    Custom,
}

impl PriorFamily {
    pub const BUILT_IN: [PriorFamily; 3] =
        [PriorFamily::BbmdUniform, PriorFamily::ToxicrInformative, PriorFamily::DataBasedInformative];

    pub fn name(self) -> &'static str {
        match self {
            PriorFamily::BbmdUniform => "bbmd",
            PriorFamily::ToxicrInformative => "toxicr",
            PriorFamily::DataBasedInformative => "data-based",
            PriorFamily::Custom => "custom",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            PriorFamily::BbmdUniform => "BBMD non-informative prior",
            PriorFamily::ToxicrInformative => "ToxicR informative prior",
            PriorFamily::DataBasedInformative => "Data based informative prior",
            PriorFamily::Custom => "Custom prior",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bbmd" | "bbmd-uniform" => Some(PriorFamily::BbmdUniform),
            "toxicr" | "toxicr-informative" => Some(PriorFamily::ToxicrInformative),
            "data-based" | "databased" | "data-based-informative" => Some(PriorFamily::DataBasedInformative),
            "custom" => Some(PriorFamily::Custom),
            _ => None,
        }
    }
}

impl std::fmt::Display for PriorFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Independent per-parameter prior for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub family: PriorFamily,
    pub model: ModelFamily,
    pub marginals: Vec<Marginal>,
}

fn u(lower: f64, upper: f64) -> Marginal {
    Marginal::Uniform { lower, upper }
}
fn n(mu: f64, sigma: f64) -> Marginal {
    Marginal::Normal { mu, sigma }
}
fn ln(mu: f64, sigma: f64) -> Marginal {
    Marginal::LogNormal { mu, sigma }
}
fn lgn(mu: f64, sigma: f64) -> Marginal {
    Marginal::LogitNormal { mu, sigma }
}
fn ga(shape: f64, rate: f64) -> Marginal {
    Marginal::Gamma { shape, rate }
}
fn be(a: f64, b: f64) -> Marginal {
    Marginal::Beta { a, b }
}

impl PriorSpec {
    /// Built-in prior for `(family, model)`. Panics for [`PriorFamily::Custom`].
    pub fn built_in(family: PriorFamily, model: ModelFamily) -> Self {
        use ModelFamily as M;
        let marginals = match family {
            PriorFamily::BbmdUniform => match model {
                M::Logistic | M::Probit => vec![u(-50.0, 50.0), u(0.0, 100.0)],
                M::QuantalLinear => vec![u(0.0, 100.0), u(0.0, 1.0)],
                M::Weibull => vec![u(0.0, 50.0), u(0.0, 15.0), u(0.0, 1.0)],
                M::MultiStage2 => vec![u(0.0, 100.0), u(0.0, 100.0), u(0.0, 1.0)],
                M::LogLogistic | M::LogProbit => vec![u(-5.0, 15.0), u(0.0, 15.0), u(0.0, 1.0)],
                // δ ~ Unif(-3, 3.3) restricted to its constraint [0, 1], which
                // renormalises to Unif(0, 1).
                M::DichotomousHill => vec![u(-5.0, 15.0), u(0.0, 15.0), u(0.0, 1.0), u(0.0, 1.0)],
                M::Constant => vec![u(0.0, 1.0)],
            },
            PriorFamily::ToxicrInformative => match model {
                M::Logistic | M::Probit => vec![n(0.0, 1.0), ln(0.0, 2.0)],
                M::QuantalLinear => vec![ln(0.0, 1.0), lgn(0.0, 2.0)],
                M::Weibull => vec![ln(0.4243, 0.5), ln(0.0, 1.5), lgn(0.0, 2.0)],
                M::MultiStage2 => vec![ln(0.0, 0.5), ln(0.0, 1.0), lgn(0.0, 2.0)],
                M::LogLogistic | M::LogProbit => vec![n(0.0, 1.0), ln(0.6931, 0.5), lgn(0.0, 2.0)],
                // The intercept uses N(-3, 3.3); with N(0, 1) the tabulated Hill
                // marginal likelihoods are off by one to two orders of magnitude.
                M::DichotomousHill => vec![n(-3.0, 3.3), ln(0.6931, 0.5), lgn(-1.0, 2.0), lgn(0.0, 3.0)],
                M::Constant => vec![lgn(0.0, 2.0)],
            },
            PriorFamily::DataBasedInformative => match model {
                M::Logistic => vec![n(-2.79, 1.49), ga(2.01, 0.49)],
                M::Probit => vec![n(-1.57, 0.80), ga(2.07, 0.90)],
                M::QuantalLinear => vec![ga(0.92, 0.74), be(0.29, 3.26)],
                M::Weibull => vec![ga(2.55, 1.60), ga(0.87, 0.60), be(0.31, 3.64)],
                M::MultiStage2 => vec![ga(0.29, 0.30), ga(0.48, 0.86), be(0.31, 3.33)],
                M::LogLogistic => vec![n(0.41, 1.92), ga(2.72, 1.24), be(0.32, 3.66)],
                M::LogProbit => vec![n(0.23, 1.11), ga(2.63, 2.12), be(0.33, 3.83)],
                M::DichotomousHill => vec![n(0.23, 1.11), ga(4.46, 1.52), be(0.35, 2.78), be(1.18, 0.39)],
                M::Constant => vec![u(0.0, 1.0)],
            },
            PriorFamily::Custom => panic!("custom priors have no built-in marginals"),
        };
        Self { family, model, marginals }
    }

    /// Validate a prior against the model it is bound to.
    pub fn validate(&self) -> Result<()> {
        if self.marginals.len() != self.model.n_params() {
            return Err(Error::Prior(format!(
                "{} needs {} marginals, got {}",
                self.model,
                self.model.n_params(),
                self.marginals.len()
            )));
        }
        for m in &self.marginals {
            m.validate()?;
        }
        Ok(())
    }

    /// Parse a custom prior from JSON:
    /// `{"model": "weibull", "marginals": [{"dist": "log-normal", "mu": 0.4, "sigma": 0.5}, ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            #[serde(default)]
            family: Option<PriorFamily>,
            model: ModelFamily,
            marginals: Vec<Marginal>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Prior(e.to_string()))?;
        let spec = Self { family: doc.family.unwrap_or(PriorFamily::Custom), model: doc.model, marginals: doc.marginals };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_params(&self) -> usize {
        self.marginals.len()
    }

    /// Joint log density on the sampled scale; `-inf` outside the support.
    #[inline]
    pub fn log_density(&self, sampled: &[f64]) -> f64 {
        let mut total = 0.0;
        for (m, &s) in self.marginals.iter().zip(sampled) {
            total += m.log_density(s);
            if total == f64::NEG_INFINITY {
                return total;
            }
        }
        if !self.natural_constraints_hold(sampled) {
            return f64::NEG_INFINITY;
        }
        total
    }

    /// Joint log prior of a sampled-scale parameter vector.
    pub fn log_prior_density(&self, theta: &ParamVector) -> Result<f64> {
        self.expect_sampled(theta)?;
        Ok(self.log_density(&theta.values))
    }

    fn natural_constraints_hold(&self, sampled: &[f64]) -> bool {
        self.model
            .constraints()
            .iter()
            .zip(self.marginals.iter().zip(sampled))
            .all(|(c, (m, &s))| c.admits(m.transform().to_natural(s)))
    }

    fn expect_sampled(&self, theta: &ParamVector) -> Result<()> {
        if theta.scale != Scale::Sampled || theta.len() != self.n_params() {
            return Err(Error::Input(format!(
                "expected a sampled-scale vector of length {} for {}",
                self.n_params(),
                self.model
            )));
        }
        Ok(())
    }

    /// Write the natural-scale values of `sampled` into `out`.
    #[inline]
    pub fn to_natural_into(&self, sampled: &[f64], out: &mut [f64]) {
        for ((o, m), &s) in out.iter_mut().zip(&self.marginals).zip(sampled) {
            *o = m.transform().to_natural(s);
        }
    }

    pub fn to_natural(&self, theta: &ParamVector) -> Result<ParamVector> {
        self.expect_sampled(theta)?;
        let mut out = vec![0.0; self.n_params()];
        self.to_natural_into(&theta.values, &mut out);
        Ok(ParamVector::natural(out))
    }

    pub fn to_sampled(&self, theta: &ParamVector) -> Result<ParamVector> {
        if theta.scale != Scale::Natural {
            return Err(Error::Input("expected a natural-scale parameter vector".into()));
        }
        self.model.validate(&theta.values)?;
        let values = self
            .marginals
            .iter()
            .zip(&theta.values)
            .map(|(m, &x)| m.transform().to_sampled(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(ParamVector::sampled(values))
    }

    /// A sampler with prepared per-marginal distributions.
    pub fn sampler(&self) -> PriorSampler {
        PriorSampler { marginals: self.marginals.iter().map(Marginal::sampler).collect() }
    }

    /// `n` independent sampled-scale draws, one row per draw.
    pub fn sample_prior(&self, seed: u64, n: usize) -> Vec<Vec<f64>> {
        let sampler = self.sampler();
        let mut rng = rng_from_seed(seed);
        (0..n)
            .map(|_| {
                let mut row = vec![0.0; self.n_params()];
                sampler.draw_into(&mut rng, &mut row);
                row
            })
            .collect()
    }

    /// Coordinate-wise prior centre on the sampled scale.
    pub fn center(&self) -> Vec<f64> {
        self.marginals.iter().map(Marginal::center).collect()
    }
}

/// Prepared sampler for a [`PriorSpec`].
#[derive(Debug, Clone)]
pub struct PriorSampler {
    marginals: Vec<MarginalSampler>,
}

impl PriorSampler {
    #[inline]
    pub fn draw_into(&self, rng: &mut Rng, out: &mut [f64]) {
        for (o, m) in out.iter_mut().zip(&self.marginals) {
            *o = m.draw(rng);
        }
    }
}

/// Prior model probabilities `P(M_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPriorProbabilities {
    probabilities: Vec<f64>,
}

impl ModelPriorProbabilities {
    pub fn uniform(k: usize) -> Self {
        Self { probabilities: vec![1.0 / k as f64; k] }
    }

    pub fn new(probabilities: Vec<f64>) -> Result<Self> {
        let sum: f64 = probabilities.iter().sum();
        if probabilities.is_empty()
            || probabilities.iter().any(|&p| !(p >= 0.0) || !p.is_finite())
            || (sum - 1.0).abs() > 1e-12
        {
            return Err(Error::Input(format!("model prior probabilities must be non-negative and sum to 1 (sum = {sum})")));
        }
        Ok(Self { probabilities })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_probabilities(&self) -> Vec<f64> {
        self.probabilities.iter().map(|p| p.ln()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_marginals() -> Vec<Marginal> {
        vec![
            u(0.0, 1.0),
            Marginal::LogitUniform { lower: -3.0, upper: 3.3 },
            n(-2.79, 1.49),
            ln(0.4243, 0.5),
            lgn(-1.0, 2.0),
            ga(2.01, 0.49),
            ga(0.29, 0.30),
            be(0.29, 3.26),
            be(1.18, 0.39),
        ]
    }

    #[test]
    fn bbmd_uniform_density() {
        let p = PriorSpec::built_in(PriorFamily::BbmdUniform, ModelFamily::Logistic);
        let v = p.log_density(&[3.0, 10.0]);
        assert!((v - (-(100.0f64.ln()) - 100.0f64.ln())).abs() < 1e-12);
        assert!((Marginal::Uniform { lower: -50.0, upper: 50.0 }.log_density(7.7) + 4.60517).abs() < 1e-5);
        let ql = PriorSpec::built_in(PriorFamily::BbmdUniform, ModelFamily::QuantalLinear);
        assert_eq!(ql.log_density(&[1.0, 1.5]), f64::NEG_INFINITY);
    }

    #[test]
    fn toxicr_logistic_density_at_origin() {
        let p = PriorSpec::built_in(PriorFamily::ToxicrInformative, ModelFamily::Logistic);
        let v = p.log_prior_density(&ParamVector::sampled(vec![0.0, 0.0])).unwrap();
        let h = -0.5 * (2.0 * std::f64::consts::PI).ln();
        assert!((v - (2.0 * h - 2.0f64.ln())).abs() < 1e-12);
        assert!((v + 2.53102).abs() < 1e-5);
    }

    #[test]
    fn every_built_in_prior_covers_its_model() {
        for fam in PriorFamily::BUILT_IN {
            for m in ModelFamily::PAPER_SET.iter().chain([ModelFamily::Constant].iter()) {
                let p = PriorSpec::built_in(fam, *m);
                p.validate().unwrap();
                let draws = p.sample_prior(3, 200);
                for d in &draws {
                    assert!(p.log_density(d).is_finite(), "{fam} {m} {d:?}");
                    let nat = p.to_natural(&ParamVector::sampled(d.clone())).unwrap();
                    m.validate(&nat.values).unwrap();
                }
            }
        }
    }

    #[test]
    fn transforms_and_round_trip() {
        let p = PriorSpec::built_in(PriorFamily::ToxicrInformative, ModelFamily::Logistic);
        let s = p.to_sampled(&ParamVector::natural(vec![0.7, 2.5])).unwrap();
        assert_eq!(s.values[0], 0.7);
        assert!((s.values[1] - 2.5f64.ln()).abs() < 1e-15);

        let ql = PriorSpec::built_in(PriorFamily::ToxicrInformative, ModelFamily::QuantalLinear);
        let s = ql.to_sampled(&ParamVector::natural(vec![1.0, 0.5])).unwrap();
        assert_eq!(s.values[1], 0.0);

        let w = PriorSpec::built_in(PriorFamily::ToxicrInformative, ModelFamily::Weibull);
        let theta = ParamVector::natural(vec![0.3, 2.0, 0.1]);
        let back = w.to_natural(&w.to_sampled(&theta).unwrap()).unwrap();
        for (a, b) in back.values.iter().zip(&theta.values) {
            assert!((a - b).abs() <= 1e-12 * b.abs());
        }
        assert!(matches!(
            w.to_sampled(&ParamVector::natural(vec![0.3, 2.0, 0.0])),
            Err(Error::Boundary(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = PriorSpec::built_in(PriorFamily::DataBasedInformative, ModelFamily::DichotomousHill);
        assert_eq!(p.sample_prior(11, 50), p.sample_prior(11, 50));
        assert_ne!(p.sample_prior(11, 50), p.sample_prior(12, 50));
    }

    #[test]
    fn sample_means_match_analytic_moments() {
        let unif = PriorSpec { family: PriorFamily::Custom, model: ModelFamily::Constant, marginals: vec![u(0.0, 1.0)] };
        let draws = unif.sample_prior(1, 1_000_000);
        let mean = draws.iter().map(|d| d[0]).sum::<f64>() / draws.len() as f64;
        assert!((mean - 0.5).abs() < 0.002);

        let logistic = PriorSpec::built_in(PriorFamily::DataBasedInformative, ModelFamily::Logistic);
        let draws = logistic.sample_prior(2, 1_000_000);
        let mean = draws.iter().map(|d| d[1]).sum::<f64>() / draws.len() as f64;
        let band = 3.0 * (2.01f64.sqrt() / 0.49) / 1e3;
        assert!((mean - 2.01 / 0.49).abs() < band, "mean {mean}");
    }

    /// Kolmogorov–Smirnov statistic of `xs` against `cdf`.
    fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max((i as f64 + 1.0) / n - f)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn samplers_match_cdfs() {
        // Asymptotic KS critical value at the 0.001 level: 1.9495 / √n.
        let n = 100_000;
        let critical = 1.9495 / (n as f64).sqrt();
        for (i, m) in all_marginals().into_iter().enumerate() {
            let sampler = m.sampler();
            let mut rng = rng_from_seed(100 + i as u64);
            let xs: Vec<f64> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
            let d = ks_statistic(xs, |x| m.cdf(x));
            assert!(d < critical, "{m:?}: D = {d}");
        }
    }

    /// Adaptive Simpson on the density, split at interior points to resolve
    /// integrable endpoint singularities.
    fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            let c = 0.5 * (a + b);
            (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
        }
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let c = 0.5 * (a + b);
            let (l, r) = (simpson(f, a, c), simpson(f, c, b));
            if depth == 0 || (l + r - whole).abs() < 15.0 * tol {
                l + r + (l + r - whole) / 15.0
            } else {
                rec(f, a, c, l, tol / 2.0, depth - 1) + rec(f, c, b, r, tol / 2.0, depth - 1)
            }
        }
        rec(f, a, b, simpson(f, a, b), tol, depth)
    }

    #[test]
    fn marginal_densities_normalise() {
        for m in all_marginals() {
            let f = |x: f64| m.log_density(x).exp();
            let (lo, hi) = m.support();
            let total = match m {
                Marginal::Beta { a, b } => {
                    // x = t^k removes the x^{a-1} pole at 0 (and symmetric at 1).
                    let ka = (1.0 / a).ceil();
                    let kb = (1.0 / b).ceil();
                    let left = integrate(&|t: f64| f(t.powf(ka)) * ka * t.powf(ka - 1.0), 0.0, 0.5f64.powf(1.0 / ka), 1e-10, 50);
                    let right =
                        integrate(&|t: f64| f(1.0 - t.powf(kb)) * kb * t.powf(kb - 1.0), 0.0, 0.5f64.powf(1.0 / kb), 1e-10, 50);
                    left + right
                }
                Marginal::Gamma { shape, rate } => {
                    let k = (1.0 / shape).ceil();
                    let split = 1.0;
                    let head = integrate(&|t: f64| f(t.powf(k)) * k * t.powf(k - 1.0), 0.0, split, 1e-10, 50);
                    head + integrate(&f, split, 200.0 / rate, 1e-10, 50)
                }
                Marginal::Normal { mu, sigma } | Marginal::LogNormal { mu, sigma } | Marginal::LogitNormal { mu, sigma } => {
                    integrate(&f, mu - 40.0 * sigma, mu + 40.0 * sigma, 1e-10, 50)
                }
                _ => integrate(&f, lo, hi, 1e-10, 50),
            };
            assert!((total - 1.0).abs() < 1e-6, "{m:?}: {total}");
        }
    }

    #[test]
    fn density_finite_exactly_on_support() {
        assert!(be(0.29, 3.26).log_density(0.0).is_infinite());
        assert!(be(0.29, 3.26).log_density(1e-9).is_finite());
        assert!(ga(2.0, 1.0).log_density(-1e-9).is_infinite());
        assert!(ga(2.0, 1.0).log_density(1e-9).is_finite());
        assert!(u(0.0, 1.0).log_density(1.0 + 1e-12).is_infinite());
        assert!(n(0.0, 1.0).log_density(1e3).is_finite());
    }

    #[test]
    fn json_round_trip() {
        let spec = PriorSpec::built_in(PriorFamily::ToxicrInformative, ModelFamily::DichotomousHill);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(PriorSpec::from_json(&text).unwrap(), spec);
        let custom = r#"{"model":"logistic","marginals":[{"dist":"normal","mu":0,"sigma":1},{"dist":"gamma","shape":2,"rate":1}]}"#;
        let p = PriorSpec::from_json(custom).unwrap();
        assert_eq!(p.family, PriorFamily::Custom);
        assert!(PriorSpec::from_json(r#"{"model":"logistic","marginals":[]}"#).is_err());
    }

    #[test]
    fn model_prior_probabilities() {
        let p = ModelPriorProbabilities::uniform(8);
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(ModelPriorProbabilities::new(vec![0.5, 0.6]).is_err());
        assert!(ModelPriorProbabilities::new(vec![-0.1, 1.1]).is_err());
    }
}
