//! Run orchestration over the (dataset × prior × method × model) grid and
//! the tables and files built from it.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bma::{
    bmd_draws, equal_weight_result, mixture_quantiles, posterior_model_weights, summarize_bmd, BmaResult, BmdSummary,
    WeightSource,
};
use crate::error::{Error, Result};
use crate::inference::{sample_posterior, DichotomousDataset, McmcConfig, OptimizerConfig, PosteriorSample};
use crate::marginal::{
    ml_bridge_sampling_with, ml_density_estimation_with, ml_laplace_with, ml_mc_reference, ml_mle_schwarz,
    weights_mcmc_schwarz, BridgeConfig, DensityConfig, LaplaceConfig, MlEstimate, MlMethod, PointEstimate, StencilMode,
};
use crate::models::{BmrSpec, ModelFamily};
use crate::priors::{ModelPriorProbabilities, PriorFamily, PriorSpec};
use crate::rng::derive_seed;

pub mod datasets;
pub mod format;
pub mod oracle;
mod output;

pub use datasets::{embedded_dataset, load_dataset, EMBEDDED_NAMES};
pub use output::{bmd_table, emit_plot_data, ml_table, ml_values, model_table, write_bundle, write_timings};

const REFERENCE_TAG: u64 = 0x7265_6665_7265_6e63;
const BRIDGE_TAG: u64 = 0x6272_6964_6765;
const MIN_REFERENCE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Embedded dataset name or CSV path.
    pub dataset: String,
    pub prior: PriorFamily,
    /// One spec per entry of `models`; required when `prior` is `Custom`.
    pub custom_priors: Option<Vec<PriorSpec>>,
    pub models: Vec<ModelFamily>,
    pub methods: Vec<MlMethod>,
    pub bmr: f64,
    /// Sampler settings. The sampler seed is always the master `seed`.
    pub mcmc: McmcConfig,
    pub mc_reference_samples: usize,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub laplace_stencil: StencilMode,
    pub density_point: PointEstimate,
    pub bmd_summary: BmdSummary,
    /// Prior model probabilities; uniform when absent.
    pub model_priors: Option<Vec<f64>>,
    /// Write per-model BMD posterior draws.
    pub export_draws: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: "dataset1".into(),
            prior: PriorFamily::BbmdUniform,
            custom_priors: None,
            models: ModelFamily::PAPER_SET.to_vec(),
            methods: MlMethod::ALL.to_vec(),
            bmr: 0.1,
            mcmc: McmcConfig::default(),
            mc_reference_samples: 10_000_000,
            seed: 42,
            out_dir: None,
            laplace_stencil: StencilMode::default(),
            density_point: PointEstimate::default(),
            bmd_summary: BmdSummary::default(),
            model_priors: None,
            export_draws: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one method is required".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        BmrSpec::new(self.bmr).map_err(|e| Error::Config(e.to_string()))?;
        let mut mcmc = self.mcmc;
        mcmc.seed = self.seed;
        mcmc.validate()?;
        if self.methods.contains(&MlMethod::McReference) && self.mc_reference_samples < MIN_REFERENCE_SAMPLES {
            return Err(Error::Config(format!(
                "reference needs at least {MIN_REFERENCE_SAMPLES} samples, got {}",
                self.mc_reference_samples
            )));
        }
        if let Some(p) = &self.model_priors {
            if p.len() != self.models.len() {
                return Err(Error::Config(format!("{} model prior probabilities for {} models", p.len(), self.models.len())));
            }
            ModelPriorProbabilities::new(p.clone()).map_err(|e| Error::Config(e.to_string()))?;
        }
        match (&self.custom_priors, self.prior) {
            (None, PriorFamily::Custom) => return Err(Error::Config("custom prior family without prior specs".into())),
            (Some(specs), _) => {
                if specs.len() != self.models.len() {
                    return Err(Error::Config(format!("{} custom prior specs for {} models", specs.len(), self.models.len())));
                }
                for (s, &m) in specs.iter().zip(&self.models) {
                    if s.model != m {
                        return Err(Error::Config(format!("custom prior for {} listed where {} is expected", s.model.name(), m.name())));
                    }
                    s.validate()?;
                }
            }
            (None, _) => {}
        }
        Ok(())
    }

    /// Methods in canonical column order, without duplicates.
    pub fn ordered_methods(&self) -> Vec<MlMethod> {
        MlMethod::ALL.into_iter().filter(|m| self.methods.contains(m)).collect()
    }

    fn prior_specs(&self) -> Vec<PriorSpec> {
        match &self.custom_priors {
            Some(specs) => specs.clone(),
            None => self.models.iter().map(|&m| PriorSpec::built_in(self.prior, m)).collect(),
        }
    }

    fn prior_family(&self) -> PriorFamily {
        if self.custom_priors.is_some() {
            PriorFamily::Custom
        } else {
            self.prior
        }
    }

    fn model_prior_probabilities(&self) -> ModelPriorProbabilities {
        match &self.model_priors {
            Some(p) => ModelPriorProbabilities::new(p.clone()).expect("validated"),
            None => ModelPriorProbabilities::uniform(self.models.len()),
        }
    }

    pub fn mcmc_config(&self) -> McmcConfig {
        McmcConfig { seed: self.seed, ..self.mcmc }
    }

    pub fn reference_seed(&self) -> u64 {
        derive_seed(self.seed, &[REFERENCE_TAG])
    }

    pub fn bridge_seed(&self) -> u64 {
        derive_seed(self.seed, &[BRIDGE_TAG])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub max_rhat: f64,
    pub min_ess: f64,
    pub acceptance: Vec<f64>,
    /// Posterior mean on the natural scale.
    pub natural_mean: Vec<f64>,
    pub warnings: Vec<String>,
}

/// BMD posterior summary of a single model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBmd {
    pub bmdl: f64,
    pub bmd: f64,
    pub bmdu: Option<f64>,
    pub censored_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRun {
    pub model: ModelFamily,
    pub prior: PriorSpec,
    /// One entry per requested ML-valued method, in column order.
    pub estimates: Vec<MlEstimate>,
    pub posterior: std::result::Result<PosteriorSummary, String>,
    pub bmd: Option<ModelBmd>,
    #[serde(skip)]
    pub bmd_draws: Vec<f64>,
}

impl ModelRun {
    pub fn estimate(&self, method: MlMethod) -> Option<&MlEstimate> {
        self.estimates.iter().find(|e| e.method == method)
    }
}

/// Weights and BMA summary for one weight source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSummary {
    pub source: WeightSource,
    pub weights: std::result::Result<Vec<f64>, String>,
    pub bma: std::result::Result<BmaResult, String>,
}

/// Everything computed for one dataset under one prior family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub dataset: DichotomousDataset,
    pub prior: PriorFamily,
    pub methods: Vec<MlMethod>,
    pub models: Vec<ModelRun>,
    /// Requested methods in column order, then equal weight.
    pub summaries: Vec<WeightedSummary>,
    /// Wall-clock seconds per step; kept out of the serialized report.
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
}

impl AnalysisReport {
    pub fn summary(&self, source: WeightSource) -> Option<&WeightedSummary> {
        self.summaries.iter().find(|s| s.source == source)
    }

    /// `dataset_prior`, used for output file names.
    pub fn key(&self) -> String {
        format!("{}_{}", self.dataset.label(), self.prior.name())
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for run in &self.models {
            if let Err(e) = &run.posterior {
                out.push(format!("{}/{}: sampler: {e}", self.key(), run.model.name()));
            }
            for est in &run.estimates {
                if let Some(r) = est.failure_reason() {
                    out.push(format!("{}/{}/{}: {r}", self.key(), run.model.name(), est.method.name()));
                }
            }
        }
        for s in &self.summaries {
            if let Err(e) = &s.weights {
                out.push(format!("{}/{}: weights: {e}", self.key(), s.source.name()));
            } else if let Err(e) = &s.bma {
                out.push(format!("{}/{}: bma: {e}", self.key(), s.source.name()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub package: String,
    pub version: String,
    pub master_seed: u64,
    pub mcmc_seed: u64,
    pub reference_seed: u64,
    pub bridge_seed: u64,
    pub optimizer_seed: u64,
    pub mcmc: McmcConfig,
    pub mc_reference_samples: usize,
    pub bmr: f64,
    pub bmd_summary: BmdSummary,
    pub laplace_stencil: StencilMode,
    pub density_point: PointEstimate,
}

impl Provenance {
    fn new(cfg: &RunConfig) -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            master_seed: cfg.seed,
            mcmc_seed: cfg.mcmc_config().seed,
            reference_seed: cfg.reference_seed(),
            bridge_seed: cfg.bridge_seed(),
            optimizer_seed: OptimizerConfig::default().seed,
            mcmc: cfg.mcmc_config(),
            mc_reference_samples: cfg.mc_reference_samples,
            bmr: cfg.bmr,
            bmd_summary: cfg.bmd_summary,
            laplace_stencil: cfg.laplace_stencil,
            density_point: cfg.density_point,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub analyses: Vec<AnalysisReport>,
}

impl ReportBundle {
    pub fn failures(&self) -> Vec<String> {
        self.analyses.iter().flat_map(|a| a.failures()).collect()
    }

    pub fn has_failures(&self) -> bool {
        !self.failures().is_empty()
    }

    pub fn analysis(&self, dataset: &str, prior: PriorFamily) -> Option<&AnalysisReport> {
        self.analyses.iter().find(|a| a.dataset.label() == dataset && a.prior == prior)
    }
}

type ModelOutput = (ModelRun, Option<PosteriorSample>, Vec<(String, f64)>);

fn run_model(dataset: &DichotomousDataset, prior: &PriorSpec, cfg: &RunConfig, methods: &[MlMethod]) -> ModelOutput {
    let model = prior.model;
    let family = prior.family;
    let mut timings = Vec::new();
    let mut timed = |label: &str, start: Instant| timings.push((format!("{}/{label}", model.name()), start.elapsed().as_secs_f64()));

    let t = Instant::now();
    let sample = sample_posterior(dataset, prior, &cfg.mcmc_config());
    timed("mcmc", t);
    let bmr = BmrSpec::new(cfg.bmr).expect("validated");

    let mut estimates = Vec::new();
    for &method in methods {
        let t = Instant::now();
        let est = match method {
            MlMethod::McmcSchwarz => continue,
            MlMethod::MleSchwarz => ml_mle_schwarz(dataset, model, family, OptimizerConfig::default()),
            MlMethod::Laplace => {
                ml_laplace_with(dataset, prior, LaplaceConfig { stencil: cfg.laplace_stencil, ..Default::default() })
            }
            MlMethod::McReference => ml_mc_reference(dataset, prior, cfg.mc_reference_samples, cfg.reference_seed()),
            MlMethod::DensityEstimation | MlMethod::BridgeSampling => match &sample {
                Err(e) => MlEstimate::failure(method, model, family, format!("no posterior sample: {e}")),
                Ok(s) if method == MlMethod::DensityEstimation => {
                    ml_density_estimation_with(dataset, prior, s, DensityConfig { point: cfg.density_point })
                }
                Ok(s) => ml_bridge_sampling_with(dataset, prior, s, BridgeConfig { seed: cfg.bridge_seed(), ..Default::default() }),
            },
        };
        timed(method.name(), t);
        estimates.push(est);
    }

    let (posterior, bmd, draws) = match &sample {
        Err(e) => (Err(e.to_string()), None, Vec::new()),
        Ok(s) => {
            let draws = bmd_draws(s, bmr);
            let q = mixture_quantiles(std::slice::from_ref(&draws), &[1.0], &[0.05, 0.5, 0.95]).expect("nonempty draws");
            let censored = draws.iter().filter(|v| !v.is_finite()).count() as f64 / draws.len() as f64;
            let bmd = ModelBmd { bmdl: q[0], bmd: q[1], bmdu: q[2].is_finite().then_some(q[2]), censored_fraction: censored };
            let summary = PosteriorSummary {
                max_rhat: s.diagnostics.max_rhat(),
                min_ess: s.diagnostics.min_ess(),
                acceptance: s.diagnostics.acceptance.clone(),
                natural_mean: s.natural_mean().as_slice().to_vec(),
                warnings: s.warnings.clone(),
            };
            (Ok(summary), Some(bmd), draws)
        }
    };
    let run = ModelRun { model, prior: prior.clone(), estimates, posterior, bmd, bmd_draws: draws };
    (run, sample.ok(), timings)
}

fn mcmc_schwarz_weights(
    dataset: &DichotomousDataset,
    samples: &[Option<PosteriorSample>],
    priors: &ModelPriorProbabilities,
) -> Result<Vec<f64>> {
    let ok: Vec<usize> = (0..samples.len()).filter(|&k| samples[k].is_some()).collect();
    if ok.is_empty() {
        return Err(Error::NoModel);
    }
    let refs: Vec<_> = ok.iter().map(|&k| samples[k].as_ref().unwrap()).collect();
    let sub_priors: Vec<f64> = ok.iter().map(|&k| priors.as_slice()[k]).collect();
    let total: f64 = sub_priors.iter().sum();
    let sub_priors = ModelPriorProbabilities::new(sub_priors.iter().map(|p| p / total).collect())?;
    let w = weights_mcmc_schwarz(&refs, dataset.n_groups(), &sub_priors)?;
    let mut full = vec![0.0; samples.len()];
    for (&k, v) in ok.iter().zip(w) {
        full[k] = v;
    }
    Ok(full)
}

/// Analyse one dataset under the configured prior.
pub fn analyze(dataset: &DichotomousDataset, cfg: &RunConfig) -> AnalysisReport {
    let methods = cfg.ordered_methods();
    let specs = cfg.prior_specs();
    let priors = cfg.model_prior_probabilities();
    let mut timings = BTreeMap::new();

    let runs: Vec<ModelOutput> = specs.par_iter().map(|p| run_model(dataset, p, cfg, &methods)).collect();
    let mut models = Vec::with_capacity(runs.len());
    let mut samples = Vec::with_capacity(runs.len());
    for (run, sample, t) in runs {
        timings.extend(t);
        models.push(run);
        samples.push(sample);
    }
    let draws: Vec<Vec<f64>> = models.iter().map(|r| r.bmd_draws.clone()).collect();

    let mut summaries = Vec::new();
    for &method in &methods {
        let t = Instant::now();
        let weights = if method == MlMethod::McmcSchwarz {
            mcmc_schwarz_weights(dataset, &samples, &priors)
        } else {
            let ests: Vec<MlEstimate> = models.iter().map(|r| r.estimate(method).expect("computed").clone()).collect();
            posterior_model_weights(&ests, &priors)
        };
        let source = WeightSource::Method(method);
        let bma = match &weights {
            Ok(w) => summarize_bmd(draws.clone(), w.clone(), source, cfg.bmd_summary).map_err(|e| e.to_string()),
            Err(e) => Err(format!("no weights: {e}")),
        };
        summaries.push(WeightedSummary { source, weights: weights.map_err(|e| e.to_string()), bma });
        timings.insert(format!("weights/{}", method.name()), t.elapsed().as_secs_f64());
    }
    let k = models.len();
    let usable = draws.iter().all(|d| !d.is_empty());
    let equal = if usable {
        equal_weight_result(draws, cfg.bmd_summary).map_err(|e| e.to_string())
    } else {
        Err("a model has no posterior BMD draws".to_string())
    };
    summaries.push(WeightedSummary { source: WeightSource::EqualWeight, weights: Ok(vec![1.0 / k as f64; k]), bma: equal });

    AnalysisReport { dataset: dataset.clone(), prior: cfg.prior_family(), methods, models, summaries, timings }
}

/// Analyse the configured dataset and prior.
pub fn run_analysis(cfg: &RunConfig) -> Result<ReportBundle> {
    cfg.validate()?;
    let dataset = load_dataset(&cfg.dataset)?;
    Ok(ReportBundle { provenance: Provenance::new(cfg), analyses: vec![analyze(&dataset, cfg)] })
}

/// All embedded datasets under all three built-in prior families.
/// `dataset`, `prior` and `custom_priors` of `base` are ignored.
pub fn reproduce_paper(base: &RunConfig) -> Result<ReportBundle> {
    let mut cfg = RunConfig { custom_priors: None, ..base.clone() };
    cfg.validate()?;
    let mut analyses = Vec::new();
    for name in EMBEDDED_NAMES {
        let dataset = embedded_dataset(name).expect("embedded");
        for prior in PriorFamily::BUILT_IN {
            cfg.prior = prior;
            analyses.push(analyze(&dataset, &cfg));
        }
    }
    Ok(ReportBundle { provenance: Provenance::new(&cfg), analyses })
}
