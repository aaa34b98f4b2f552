//! Binomial likelihood, ML/MAP optimisation and posterior sampling.

mod dataset;
pub mod diagnostics;
mod likelihood;
mod mcmc;
mod nuts;
pub mod optimize;
pub mod reparam;

pub use dataset::{DichotomousDataset, DoseGroup};
pub use likelihood::{log_likelihood, log_likelihood_unchecked, PosteriorTarget};
pub use mcmc::{sample_posterior, McmcConfig, PosteriorSample, Sampler};
pub use optimize::{maximize_likelihood, maximize_likelihood_with, maximize_posterior, maximize_posterior_with, MleFit, OptimizerConfig};
pub use reparam::Reparam;

/// Largest parameter count across families, for stack buffers.
pub const MAX_PARAMS: usize = 4;
