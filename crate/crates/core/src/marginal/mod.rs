//! Marginal-likelihood estimators, all on the log scale.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::models::ModelFamily;
use crate::priors::PriorFamily;

mod bridge;
mod density;
pub mod kde;
mod laplace;
mod reference;
mod schwarz;

pub use bridge::{ml_bridge_sampling, ml_bridge_sampling_with, BridgeConfig};
pub use density::{ml_density_estimation, ml_density_estimation_at, ml_density_estimation_with, DensityConfig, PointEstimate};
pub use laplace::{ml_laplace, ml_laplace_with, LaplaceConfig, StencilMode};
pub use reference::{ml_mc_reference, ml_mc_reference_with_batch};
pub use schwarz::{ml_mle_schwarz, mle_schwarz_log_ml, weights_mcmc_schwarz};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MlMethod {
    MleSchwarz,
    McmcSchwarz,
    Laplace,
    DensityEstimation,
    BridgeSampling,
    McReference,
}

impl MlMethod {
    pub const ALL: [MlMethod; 6] = [
        MlMethod::McReference,
        MlMethod::MleSchwarz,
        MlMethod::McmcSchwarz,
        MlMethod::Laplace,
        MlMethod::DensityEstimation,
        MlMethod::BridgeSampling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MlMethod::MleSchwarz => "mle-schwarz",
            MlMethod::McmcSchwarz => "mcmc-schwarz",
            MlMethod::Laplace => "laplace",
            MlMethod::DensityEstimation => "density",
            MlMethod::BridgeSampling => "bridge",
            MlMethod::McReference => "reference",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MlMethod::MleSchwarz => "MLE-based Schwarz criterion",
            MlMethod::McmcSchwarz => "MCMC-based Schwarz criterion",
            MlMethod::Laplace => "Laplace approximation",
            MlMethod::DensityEstimation => "Density estimation",
            MlMethod::BridgeSampling => "Bridge sampling",
            MlMethod::McReference => "Reference value",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let n = name.trim().to_ascii_lowercase();
        Self::ALL.into_iter().find(|m| m.name() == n).or(match n.as_str() {
            "mle" | "schwarz" | "bic" => Some(MlMethod::MleSchwarz),
            "mcmc" => Some(MlMethod::McmcSchwarz),
            "density-estimation" | "kde" => Some(MlMethod::DensityEstimation),
            "bridge-sampling" => Some(MlMethod::BridgeSampling),
            "mc-reference" => Some(MlMethod::McReference),
            _ => None,
        })
    }

    /// Whether the method consumes the shared posterior sample.
    pub fn needs_posterior(self) -> bool {
        matches!(self, MlMethod::McmcSchwarz | MlMethod::DensityEstimation | MlMethod::BridgeSampling)
    }
}

impl std::fmt::Display for MlMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A log marginal likelihood or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MlValue {
    LogMl(f64),
    Failure(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlEstimate {
    pub method: MlMethod,
    pub model: ModelFamily,
    pub prior: PriorFamily,
    pub value: MlValue,
    /// Standard error of `log_ml`, where the method provides one.
    pub mc_standard_error: Option<f64>,
    pub metadata: BTreeMap<String, f64>,
}

impl MlEstimate {
    pub fn new(method: MlMethod, model: ModelFamily, prior: PriorFamily, log_ml: f64) -> Self {
        let value = if log_ml.is_nan() {
            MlValue::Failure("log marginal likelihood is NaN".into())
        } else {
            MlValue::LogMl(log_ml)
        };
        Self { method, model, prior, value, mc_standard_error: None, metadata: BTreeMap::new() }
    }

    pub fn failure(method: MlMethod, model: ModelFamily, prior: PriorFamily, reason: impl Into<String>) -> Self {
        Self {
            method,
            model,
            prior,
            value: MlValue::Failure(reason.into()),
            mc_standard_error: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_se(mut self, se: f64) -> Self {
        self.mc_standard_error = Some(se);
        self
    }

    pub fn with_meta(mut self, key: &str, value: f64) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    pub fn log_ml(&self) -> Option<f64> {
        match self.value {
            MlValue::LogMl(v) => Some(v),
            MlValue::Failure(_) => None,
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self.value, MlValue::Failure(_))
    }

    pub fn failure_reason(&self) -> Option<&str> {
        match &self.value {
            MlValue::Failure(r) => Some(r),
            MlValue::LogMl(_) => None,
        }
    }
}
