//! Published table values, checked at default sampler settings.
//!
//! Each analysis is computed once and shared between the tests that read it.

use std::sync::OnceLock;

use bmdbma::bma::WeightSource;
use bmdbma::report::{embedded_dataset, format::format_ml, run_analysis, AnalysisReport, RunConfig};
use bmdbma::{MlMethod, ModelFamily, PriorFamily};

/// Relative tolerance for values printed to three significant figures and
/// estimated by Monte Carlo.
const REL_TOL: f64 = 0.10;
/// Weight tolerance in percentage points (whole-percent rounding plus noise).
const WEIGHT_PTS: f64 = 2.0;
const DOSE_TOL: f64 = 0.015;

fn analysis(dataset: &str, prior: PriorFamily, methods: &[MlMethod]) -> AnalysisReport {
    let cfg = RunConfig { dataset: dataset.into(), prior, methods: methods.to_vec(), export_draws: false, ..Default::default() };
    run_analysis(&cfg).expect("valid config").analyses.remove(0)
}

fn d1_bbmd() -> &'static AnalysisReport {
    static A: OnceLock<AnalysisReport> = OnceLock::new();
    A.get_or_init(|| {
        analysis(
            "dataset1",
            PriorFamily::BbmdUniform,
            &[MlMethod::MleSchwarz, MlMethod::McmcSchwarz, MlMethod::Laplace, MlMethod::DensityEstimation, MlMethod::BridgeSampling],
        )
    })
}

fn d4_bbmd() -> &'static AnalysisReport {
    static A: OnceLock<AnalysisReport> = OnceLock::new();
    A.get_or_init(|| analysis("dataset4", PriorFamily::BbmdUniform, &[MlMethod::MleSchwarz, MlMethod::Laplace, MlMethod::BridgeSampling]))
}

fn ml(a: &AnalysisReport, model: &str, m: MlMethod) -> f64 {
    let k = a.models.iter().position(|r| r.model.name() == model).expect("model present");
    a.models[k].estimate(m).and_then(|e| e.log_ml()).map_or(f64::NAN, f64::exp)
}

fn weights(a: &AnalysisReport, m: MlMethod) -> Vec<f64> {
    a.summary(WeightSource::Method(m)).unwrap().weights.clone().unwrap()
}

fn assert_rel(got: f64, want: f64, what: &str) {
    assert!((got / want - 1.0).abs() <= REL_TOL, "{what}: {got:e} vs {want:e}");
}

fn assert_weights(got: &[f64], want_pct: [f64; 8], what: &str) {
    for (g, w) in got.iter().zip(want_pct) {
        assert!((g * 100.0 - w).abs() <= WEIGHT_PTS, "{what}: {:?} vs {want_pct:?}", got.iter().map(|v| v * 100.0).collect::<Vec<_>>());
    }
}

#[test]
fn embedded_datasets() {
    let rows = |name: &str| embedded_dataset(name).unwrap().groups().iter().map(|g| (g.dose, g.n, g.y)).collect::<Vec<_>>();
    assert_eq!(rows("dataset1"), [(0.0, 15, 0), (0.25, 30, 5), (0.5, 29, 26), (1.0, 16, 16)]);
    assert_eq!(rows("dataset2"), [(0.0, 48, 0), (0.1, 46, 1), (0.334, 46, 4), (1.0, 41, 15)]);
    assert_eq!(rows("dataset3"), [(0.0, 27, 9), (0.167, 28, 20), (0.332, 28, 24), (0.665, 28, 27), (1.0, 29, 29)]);
    assert_eq!(rows("dataset4"), [(0.0, 20, 1), (0.25, 20, 2), (0.5, 20, 5), (1.0, 20, 11)]);
}

#[test]
fn bridge_column_dataset1_bbmd() {
    let want = [32.5, 9.53, 0.0, 4.49, 0.01, 56.0, 26.3, 5.79];
    let a = d1_bbmd();
    for (run, w) in a.models.iter().zip(want) {
        let got = ml(a, run.model.name(), MlMethod::BridgeSampling);
        if w == 0.0 {
            assert_eq!(format_ml(Some(got.ln())), "0", "{}", run.model);
        } else {
            assert_rel(got * 1e6, w, run.model.name());
        }
    }
}

#[test]
fn bridge_dataset4_hill() {
    assert_rel(ml(d4_bbmd(), "dichotomous-hill", MlMethod::BridgeSampling) * 1e6, 31.6, "hill");
}

#[test]
fn mle_schwarz_dataset4_column() {
    let want = [875.0, 910.0, 449.0, 474.0, 469.0, 481.0, 481.0, 241.0];
    let a = d4_bbmd();
    for (run, w) in a.models.iter().zip(want) {
        // Deterministic: only print rounding applies.
        let got = ml(a, run.model.name(), MlMethod::MleSchwarz) * 1e6;
        assert!((got - w).abs() <= 0.5, "{}: {got}", run.model);
    }
}

#[test]
fn mle_schwarz_dataset1_printed_cells() {
    let a = d1_bbmd();
    let cells: Vec<String> = a.models.iter().map(|r| format_ml(r.estimate(MlMethod::MleSchwarz).unwrap().log_ml())).collect();
    assert_eq!(cells, ["+", "+", "0.43", "+", "262", "+", "+", "+"]);
}

#[test]
fn mcmc_schwarz_weights_dataset1_bbmd() {
    assert_weights(&weights(d1_bbmd(), MlMethod::McmcSchwarz), [37.0, 41.0, 0.0, 7.0, 0.0, 7.0, 6.0, 2.0], "mcmc-schwarz");
}

#[test]
fn laplace_dataset4_bbmd_matches_outside_weibull() {
    let want = [0.54, 0.18, 0.62, f64::NAN, 0.02, 2.73, 0.97, 17.0];
    let a = d4_bbmd();
    for (run, w) in a.models.iter().zip(want) {
        if w.is_nan() {
            continue;
        }
        // The two smallest cells carry one significant figure in print.
        let got = ml(a, run.model.name(), MlMethod::Laplace) * 1e6;
        let tol = if w < 0.1 { 0.005 } else { w * REL_TOL };
        assert!((got - w).abs() <= tol, "{}: {got}", run.model);
    }
}

#[test]
fn density_dataset1_log_logistic() {
    assert_rel(ml(d1_bbmd(), "log-logistic", MlMethod::DensityEstimation) * 1e6, 60.9, "log-logistic");
}

#[test]
fn reference_weights_dataset3_toxicr() {
    let a = analysis("dataset3", PriorFamily::ToxicrInformative, &[MlMethod::McReference]);
    assert_weights(&weights(&a, MlMethod::McReference), [27.0, 14.0, 27.0, 14.0, 15.0, 1.0, 3.0, 0.0], "reference");
    assert_rel(ml(&a, "logistic", MlMethod::McReference) * 1e6, 17.6, "logistic");
}

#[test]
fn reference_dataset1_logistic_within_three_se() {
    let d = embedded_dataset("dataset1").unwrap();
    let prior = bmdbma::PriorSpec::built_in(PriorFamily::BbmdUniform, ModelFamily::PAPER_SET[0]);
    let e = bmdbma::marginal::ml_mc_reference(&d, &prior, 10_000_000, 42);
    let (l, se) = (e.log_ml().unwrap(), e.mc_standard_error.unwrap());
    // Print rounding of 32.5 adds up to 0.05 on the linear scale.
    let half_ulp = (32.55f64 / 32.5).ln();
    assert!((l - (32.5e-6f64).ln()).abs() <= 3.0 * se + half_ulp, "{} se {se}", l.exp());
}

#[test]
fn bma_dataset1_bbmd_bridge_and_equal_weight() {
    let a = d1_bbmd();
    let b = a.summary(WeightSource::Method(MlMethod::BridgeSampling)).unwrap().bma.as_ref().unwrap();
    assert!((b.bmd_estimate - 0.271).abs() <= DOSE_TOL && (b.bmdl - 0.194).abs() <= DOSE_TOL, "{b:?}");
    let e = a.summary(WeightSource::EqualWeight).unwrap().bma.as_ref().unwrap();
    assert!((e.bmd_estimate - 0.209).abs() <= DOSE_TOL && (e.bmdl - 0.151).abs() <= DOSE_TOL, "{e:?}");
}

#[test]
fn bma_dataset4_toxicr_laplace_and_equal_weight() {
    let a = analysis("dataset4", PriorFamily::ToxicrInformative, &[MlMethod::Laplace]);
    let l = a.summary(WeightSource::Method(MlMethod::Laplace)).unwrap().bma.as_ref().unwrap();
    assert!((l.bmd_estimate - 0.342).abs() <= DOSE_TOL && (l.bmdl - 0.189).abs() <= DOSE_TOL, "{l:?}");
    let e = a.summary(WeightSource::EqualWeight).unwrap().bma.as_ref().unwrap();
    assert!((e.bmd_estimate - 0.321).abs() <= DOSE_TOL && (e.bmdl - 0.191).abs() <= DOSE_TOL, "{e:?}");
}
