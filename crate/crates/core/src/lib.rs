//! Benchmark dose (BMD) estimation for dichotomous dose-response data by
//! Bayesian model averaging over eight quantal model families.
//!
//! The crate is organised bottom-up:
//!
//! * [`models`] — the quantal dose-response families, extra risk and BMD inversion.
//! * [`priors`] — parameter prior families and their sampled-scale transforms.
//! * [`inference`] — binomial likelihood, ML/MAP optimisation and MCMC.
//! * [`marginal`] — marginal-likelihood estimators and the Monte Carlo reference.
//! * [`bma`] — posterior model weights and the BMD model-average mixture.
//! * [`report`] — datasets, grid orchestration and table/plot output.

pub mod bma;
pub mod error;
pub mod inference;
pub mod marginal;
pub mod models;
pub mod priors;
pub mod report;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
pub use inference::{DichotomousDataset, DoseGroup, McmcConfig, PosteriorSample};
pub use marginal::{MlEstimate, MlMethod, MlValue};
pub use models::{BmrSpec, ModelFamily, ParamVector, Scale};
pub use priors::{ModelPriorProbabilities, PriorFamily, PriorSpec};
