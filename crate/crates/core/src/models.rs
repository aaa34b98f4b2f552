//! Quantal dose-response model families.
//!
//! Parameter order on the natural scale is `α, β[, γ[, δ]]` as listed by
//! [`ModelFamily::param_names`]; for the quantal-linear family `β` is the
//! background. Families with a `log d` term take their `d → 0+` limit at
//! zero dose.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{expit, logit, norm_cdf, norm_ppf, softplus};

/// Largest dose searched when inverting the extra-risk curve.
pub const BMD_DOSE_CAP: f64 = 1e6;

const BISECTION_MAX_ITER: usize = 200;
const DEGENERATE_BACKGROUND_TOL: f64 = 1e-12;

/// A dichotomous dose-response model family.
///
/// `Constant` is the dose-independent test model `f(d) = p`; it has an
/// analytic marginal likelihood under a uniform prior and is used as an
/// oracle. It is never part of [`ModelFamily::PAPER_SET`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Logistic,
    Probit,
    QuantalLinear,
    Weibull,
    #[serde(rename = "multistage2")]
    MultiStage2,
    LogLogistic,
    LogProbit,
    DichotomousHill,
    Constant,
}

/// Model specification; the family fully determines the parameter space.
pub type ModelSpec = ModelFamily;

/// Natural-scale support of a single parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    Real,
    /// Strictly positive.
    Positive,
    /// Closed unit interval.
    Unit,
}

impl Constraint {
    pub fn admits(self, x: f64) -> bool {
        match self {
            Constraint::Real => x.is_finite(),
            Constraint::Positive => x.is_finite() && x > 0.0,
            Constraint::Unit => (0.0..=1.0).contains(&x),
        }
    }
}

/// Which scale a parameter vector lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Natural,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub scale: Scale,
}

impl ParamVector {
    pub fn natural(values: impl Into<Vec<f64>>) -> Self {
        Self { values: values.into(), scale: Scale::Natural }
    }

    pub fn sampled(values: impl Into<Vec<f64>>) -> Self {
        Self { values: values.into(), scale: Scale::Sampled }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Benchmark response under the extra-risk definition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmrSpec {
    bmr: f64,
}

impl BmrSpec {
    pub fn new(bmr: f64) -> Result<Self> {
        if bmr > 0.0 && bmr < 1.0 {
            Ok(Self { bmr })
        } else {
            Err(Error::InvalidBmr(bmr))
        }
    }

    pub fn value(&self) -> f64 {
        self.bmr
    }
}

impl Default for BmrSpec {
    fn default() -> Self {
        Self { bmr: 0.1 }
    }
}

/// Response probability and its complement, each computed without cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Response {
    pub p: f64,
    pub q: f64,
}

use Constraint::{Positive, Real, Unit};

impl ModelFamily {
    /// The eight families averaged over.
    pub const PAPER_SET: [ModelFamily; 8] = [
        ModelFamily::Logistic,
        ModelFamily::Probit,
        ModelFamily::QuantalLinear,
        ModelFamily::Weibull,
        ModelFamily::MultiStage2,
        ModelFamily::LogLogistic,
        ModelFamily::LogProbit,
        ModelFamily::DichotomousHill,
    ];

    pub fn n_params(self) -> usize {
        self.constraints().len()
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelFamily::Logistic | ModelFamily::Probit | ModelFamily::QuantalLinear => &["alpha", "beta"],
            ModelFamily::DichotomousHill => &["alpha", "beta", "gamma", "delta"],
            ModelFamily::Constant => &["p"],
            _ => &["alpha", "beta", "gamma"],
        }
    }

    pub fn constraints(self) -> &'static [Constraint] {
        match self {
            ModelFamily::Logistic | ModelFamily::Probit => &[Real, Positive],
            ModelFamily::QuantalLinear => &[Positive, Unit],
            ModelFamily::Weibull | ModelFamily::MultiStage2 => &[Positive, Positive, Unit],
            ModelFamily::LogLogistic | ModelFamily::LogProbit => &[Real, Positive, Unit],
            ModelFamily::DichotomousHill => &[Real, Positive, Unit, Unit],
            ModelFamily::Constant => &[Unit],
        }
    }

    /// Machine name used on the command line and in output files.
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Logistic => "logistic",
            ModelFamily::Probit => "probit",
            ModelFamily::QuantalLinear => "quantal-linear",
            ModelFamily::Weibull => "weibull",
            ModelFamily::MultiStage2 => "multistage2",
            ModelFamily::LogLogistic => "log-logistic",
            ModelFamily::LogProbit => "log-probit",
            ModelFamily::DichotomousHill => "dichotomous-hill",
            ModelFamily::Constant => "constant",
        }
    }

    /// Human-readable table label.
    pub fn label(self) -> &'static str {
        match self {
            ModelFamily::Logistic => "Logistic",
            ModelFamily::Probit => "Probit",
            ModelFamily::QuantalLinear => "Q-linear",
            ModelFamily::Weibull => "Weibull",
            ModelFamily::MultiStage2 => "Multi-stage2",
            ModelFamily::LogLogistic => "Log Logistic",
            ModelFamily::LogProbit => "Log Probit",
            ModelFamily::DichotomousHill => "Dichotomous-Hill",
            ModelFamily::Constant => "Constant",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let n = name.to_ascii_lowercase().replace(['_', ' '], "-");
        ModelFamily::PAPER_SET
            .iter()
            .chain(std::iter::once(&ModelFamily::Constant))
            .copied()
            .find(|m| m.name() == n || m.label().to_ascii_lowercase().replace(' ', "-") == n)
    }

    /// Check natural-scale `theta` against the family constraints.
    pub fn validate(self, theta: &[f64]) -> Result<()> {
        let cons = self.constraints();
        if theta.len() != cons.len() {
            return Err(Error::InvalidParameter {
                model: self.name(),
                reason: format!("expected {} parameters, got {}", cons.len(), theta.len()),
            });
        }
        for ((c, &x), name) in cons.iter().zip(theta).zip(self.param_names()) {
            if !c.admits(x) {
                return Err(Error::InvalidParameter {
                    model: self.name(),
                    reason: format!("{name} = {x} violates {c:?} constraint"),
                });
            }
        }
        Ok(())
    }

    /// `f(d | θ)` and `1 − f(d | θ)` for an already-validated natural-scale `theta`.
    #[inline]
    pub fn response(self, theta: &[f64], dose: f64) -> Response {
        match self {
            ModelFamily::Logistic => {
                let z = theta[0] + theta[1] * dose;
                Response { p: expit(z), q: expit(-z) }
            }
            ModelFamily::Probit => {
                let z = theta[0] + theta[1] * dose;
                Response { p: norm_cdf(z), q: norm_cdf(-z) }
            }
            ModelFamily::QuantalLinear => {
                let (a, bg) = (theta[0], theta[1]);
                exp_family(bg, a * dose)
            }
            ModelFamily::Weibull => {
                let t = if dose > 0.0 { theta[1] * dose.powf(theta[0]) } else { 0.0 };
                exp_family(theta[2], t)
            }
            ModelFamily::MultiStage2 => exp_family(theta[2], theta[0] * dose + theta[1] * dose * dose),
            ModelFamily::LogLogistic | ModelFamily::LogProbit => {
                let (l, lc) = self.log_dose_link(theta[0], theta[1], dose);
                let g = theta[2];
                Response { p: g + (1.0 - g) * l, q: (1.0 - g) * lc }
            }
            ModelFamily::DichotomousHill => {
                let (l, lc) = self.log_dose_link(theta[0], theta[1], dose);
                let (g, dl) = (theta[2], theta[3]);
                Response { p: dl * (g + (1.0 - g) * l), q: (1.0 - dl) + dl * (1.0 - g) * lc }
            }
            ModelFamily::Constant => Response { p: theta[0], q: 1.0 - theta[0] },
        }
    }

    /// `(ln f, ln(1 − f))` evaluated in log space where the family allows it.
    #[inline]
    pub fn log_response(self, theta: &[f64], dose: f64) -> (f64, f64) {
        match self {
            ModelFamily::Logistic => {
                let z = theta[0] + theta[1] * dose;
                (-softplus(-z), -softplus(z))
            }
            ModelFamily::QuantalLinear => log_exp_family(theta[1], theta[0] * dose),
            ModelFamily::Weibull => {
                let t = if dose > 0.0 { theta[1] * dose.powf(theta[0]) } else { 0.0 };
                log_exp_family(theta[2], t)
            }
            ModelFamily::MultiStage2 => log_exp_family(theta[2], theta[0] * dose + theta[1] * dose * dose),
            _ => {
                let r = self.response(theta, dose);
                (r.p.ln(), r.q.ln())
            }
        }
    }

    /// `(L, 1 − L)` for the `α + β log d` link of the log-dose families.
    #[inline]
    fn log_dose_link(self, a: f64, b: f64, dose: f64) -> (f64, f64) {
        if dose <= 0.0 {
            return (0.0, 1.0);
        }
        let z = a + b * dose.ln();
        match self {
            ModelFamily::LogProbit => (norm_cdf(z), norm_cdf(-z)),
            _ => (expit(z), expit(-z)),
        }
    }

    /// `f(d | θ)` with constraint checking.
    pub fn evaluate(self, theta: &ParamVector, dose: f64) -> Result<f64> {
        self.check_natural(theta)?;
        if !(dose >= 0.0 && dose.is_finite()) {
            return Err(Error::InvalidParameter { model: self.name(), reason: format!("dose {dose} must be >= 0") });
        }
        Ok(self.response(&theta.values, dose).p.clamp(0.0, 1.0))
    }

    fn check_natural(self, theta: &ParamVector) -> Result<()> {
        if theta.scale != Scale::Natural {
            return Err(Error::InvalidParameter {
                model: self.name(),
                reason: "expected a natural-scale parameter vector".into(),
            });
        }
        self.validate(&theta.values)
    }

    /// Extra risk `(f(d) − f(0)) / (1 − f(0))`.
    pub fn extra_risk(self, theta: &ParamVector, dose: f64) -> Result<f64> {
        self.check_natural(theta)?;
        self.extra_risk_unchecked(&theta.values, dose)
    }

    /// Extra risk for a validated natural-scale slice.
    pub fn extra_risk_unchecked(self, theta: &[f64], dose: f64) -> Result<f64> {
        let background = self.response(theta, 0.0);
        if background.q <= DEGENERATE_BACKGROUND_TOL {
            return Err(Error::DegenerateBackground);
        }
        if dose <= 0.0 {
            return Ok(0.0);
        }
        let er = match self {
            ModelFamily::QuantalLinear => -(-theta[0] * dose).exp_m1(),
            ModelFamily::Weibull => -(-theta[1] * dose.powf(theta[0])).exp_m1(),
            ModelFamily::MultiStage2 => -(-(theta[0] * dose + theta[1] * dose * dose)).exp_m1(),
            ModelFamily::LogLogistic | ModelFamily::LogProbit => self.log_dose_link(theta[0], theta[1], dose).0,
            ModelFamily::DichotomousHill => {
                let (g, dl) = (theta[2], theta[3]);
                let l = self.log_dose_link(theta[0], theta[1], dose).0;
                dl * (1.0 - g) * l / background.q
            }
            ModelFamily::Constant => 0.0,
            ModelFamily::Logistic | ModelFamily::Probit => {
                let at = self.response(theta, dose);
                if background.p < 0.5 {
                    (at.p - background.p) / background.q
                } else {
                    (background.q - at.q) / background.q
                }
            }
        };
        Ok(er.clamp(0.0, 1.0))
    }

    /// Benchmark dose by closed-form inversion of the extra-risk curve.
    ///
    /// Returns `Ok(None)` when the extra risk never reaches the BMR below
    /// [`BMD_DOSE_CAP`].
    pub fn bmd_from_params(self, theta: &ParamVector, bmr: BmrSpec) -> Result<Option<f64>> {
        self.check_natural(theta)?;
        self.bmd_unchecked(&theta.values, bmr)
    }

    /// Closed-form BMD for a validated natural-scale slice.
    pub fn bmd_unchecked(self, theta: &[f64], bmr: BmrSpec) -> Result<Option<f64>> {
        let r = bmr.value();
        let background = self.response(theta, 0.0);
        if background.q <= DEGENERATE_BACKGROUND_TOL {
            return Err(Error::DegenerateBackground);
        }
        let c = -(-r).ln_1p();
        let d = match self {
            ModelFamily::Logistic | ModelFamily::Probit => {
                let target_p = background.p + r * background.q;
                let target_q = background.q * (1.0 - r);
                let z = if self == ModelFamily::Logistic {
                    target_p.ln() - target_q.ln()
                } else if target_p > 0.5 {
                    -norm_ppf(target_q)
                } else {
                    norm_ppf(target_p)
                };
                (z - theta[0]) / theta[1]
            }
            ModelFamily::QuantalLinear => c / theta[0],
            ModelFamily::Weibull => (c / theta[1]).powf(1.0 / theta[0]),
            ModelFamily::MultiStage2 => {
                let (a, b) = (theta[0], theta[1]);
                2.0 * c / (a + (a * a + 4.0 * b * c).sqrt())
            }
            ModelFamily::LogLogistic => ((logit(r) - theta[0]) / theta[1]).exp(),
            ModelFamily::LogProbit => ((norm_ppf(r) - theta[0]) / theta[1]).exp(),
            ModelFamily::DichotomousHill => {
                let (g, dl) = (theta[2], theta[3]);
                let amplitude = dl * (1.0 - g);
                if amplitude <= 0.0 {
                    return Ok(None);
                }
                let l = r * background.q / amplitude;
                if l >= 1.0 {
                    return Ok(None);
                }
                ((logit(l) - theta[0]) / theta[1]).exp()
            }
            ModelFamily::Constant => return Ok(None),
        };
        if d.is_finite() && d > 0.0 && d <= BMD_DOSE_CAP {
            Ok(Some(d))
        } else {
            Ok(None)
        }
    }

    /// Benchmark dose by bracketed bisection on the extra-risk curve.
    ///
    /// The bracket starts at `[0, 10 · max_dose]` and doubles until the
    /// extra risk exceeds the BMR or the bracket passes [`BMD_DOSE_CAP`].
    pub fn bmd_numeric(self, theta: &ParamVector, bmr: BmrSpec, max_dose: f64) -> Result<Option<f64>> {
        self.check_natural(theta)?;
        let th = &theta.values;
        let r = bmr.value();
        let er = |d: f64| self.extra_risk_unchecked(th, d);
        let mut hi = (10.0 * max_dose).clamp(f64::MIN_POSITIVE, BMD_DOSE_CAP);
        while er(hi)? < r {
            if hi >= BMD_DOSE_CAP {
                return Ok(None);
            }
            hi = (2.0 * hi).min(BMD_DOSE_CAP);
        }
        let mut lo = 0.0;
        for _ in 0..BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if er(mid)? < r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(hi))
    }

    /// BMD for one posterior draw: unreachable or invalid draws become `+inf`.
    pub fn bmd_draw(self, theta: &[f64], bmr: BmrSpec) -> f64 {
        match self.bmd_unchecked(theta, bmr) {
            Ok(Some(d)) => d,
            _ => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[inline]
fn exp_family(background: f64, t: f64) -> Response {
    Response {
        p: background + (1.0 - background) * (-(-t).exp_m1()),
        q: (1.0 - background) * (-t).exp(),
    }
}

#[inline]
fn log_exp_family(background: f64, t: f64) -> (f64, f64) {
    let r = exp_family(background, t);
    (r.p.ln(), (-background).ln_1p() - t)
}
