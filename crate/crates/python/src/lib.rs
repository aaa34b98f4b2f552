//! Python bindings. Reports cross the boundary as JSON strings.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use bmdbma::report::oracle::run_oracles;
use bmdbma::report::{load_dataset as load, run_analysis, RunConfig};
use bmdbma::{McmcConfig, MlMethod, PriorFamily};

fn runtime(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// `(dose, n, y)` rows of an embedded dataset or a `dose,n,y` CSV file.
#[pyfunction]
fn load_dataset(name_or_path: &str) -> PyResult<Vec<(f64, u64, u64)>> {
    let d = load(name_or_path).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(d.groups().iter().map(|g| (g.dose, g.n, g.y)).collect())
}

/// Run the full analysis for one dataset and prior family; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (dataset, prior = "bbmd", methods = None, bmr = 0.1, seed = 42, chains = 3, iterations = 11_000, warmup = 1_000, mc_samples = 10_000_000))]
#[allow(clippy::too_many_arguments)]
fn fit(
    dataset: &str,
    prior: &str,
    methods: Option<Vec<String>>,
    bmr: f64,
    seed: u64,
    chains: usize,
    iterations: usize,
    warmup: usize,
    mc_samples: usize,
) -> PyResult<String> {
    let prior = PriorFamily::from_name(prior).ok_or_else(|| PyValueError::new_err(format!("unknown prior family '{prior}'")))?;
    let mut cfg = RunConfig {
        dataset: dataset.into(),
        prior,
        bmr,
        seed,
        mcmc: McmcConfig { chains, iterations, warmup, ..Default::default() },
        mc_reference_samples: mc_samples,
        export_draws: false,
        ..Default::default()
    };
    if let Some(names) = methods {
        cfg.methods = names
            .iter()
            .map(|n| MlMethod::from_name(n).ok_or_else(|| PyValueError::new_err(format!("unknown method '{n}'"))))
            .collect::<PyResult<_>>()?;
    }
    let bundle = run_analysis(&cfg).map_err(|e| PyValueError::new_err(e.to_string()))?;
    serde_json::to_string(&bundle).map_err(runtime)
}

/// Conjugate self-tests; returns a JSON list of checks.
#[pyfunction]
#[pyo3(signature = (mc_samples = 1_000_000, seed = 42))]
fn oracle(mc_samples: usize, seed: u64) -> PyResult<String> {
    let checks = run_oracles(mc_samples, &McmcConfig { seed, ..Default::default() });
    serde_json::to_string(&checks).map_err(runtime)
}

#[pymodule]
fn bmdbma_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(load_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(oracle, m)?)?;
    Ok(())
}
