use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bmdbma::bma::BmdSummary;
use bmdbma::inference::Sampler;
use bmdbma::marginal::{PointEstimate, StencilMode};
use bmdbma::report::oracle::run_oracles;
use bmdbma::report::{bmd_table, ml_table, reproduce_paper, run_analysis, write_bundle, write_timings, ReportBundle, RunConfig};
use bmdbma::{McmcConfig, MlMethod, ModelFamily, PriorFamily, PriorSpec};

/// Exit status when any table cell carries a failure marker.
const EXIT_FAILURE_MARKER: u8 = 2;

#[derive(Parser)]
#[command(name = "bmdbma", version, about = "Benchmark dose estimation by Bayesian model averaging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyse one dataset under one prior family.
    Fit(FitArgs),
    /// Every embedded dataset under every built-in prior family.
    ReproducePaper(CommonArgs),
    /// Conjugate self-tests on the constant-response model.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Embedded dataset name (dataset1..dataset4) or a CSV file with header dose,n,y.
    #[arg(long, default_value = "dataset1")]
    dataset: String,
    /// bbmd, toxicr or data-based.
    #[arg(long, default_value = "bbmd", value_parser = parse_prior)]
    prior: PriorFamily,
    /// JSON file with one custom prior or an array of them; replaces --prior and --models.
    #[arg(long)]
    prior_file: Option<PathBuf>,
    /// Comma-separated model names; defaults to all eight.
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    models: Option<Vec<ModelFamily>>,
    /// Comma-separated marginal-likelihood methods; defaults to all.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<MlMethod>>,
    /// Prior model probabilities, one per model.
    #[arg(long, value_delimiter = ',')]
    model_priors: Option<Vec<f64>>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long, default_value_t = 0.1)]
    bmr: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = McmcConfig::default().chains)]
    chains: usize,
    /// Iterations per chain, warmup included.
    #[arg(long, default_value_t = McmcConfig::default().iterations)]
    iterations: usize,
    #[arg(long, default_value_t = McmcConfig::default().warmup)]
    warmup: usize,
    /// nuts or random-walk.
    #[arg(long, default_value = "nuts", value_parser = parse_sampler)]
    sampler: Sampler,
    /// Monte Carlo reference sample size.
    #[arg(long, default_value_t = 10_000_000)]
    mc_samples: usize,
    #[arg(long, default_value = "bmdbma-out")]
    out: PathBuf,
    /// Laplace Hessian stencil: log-density or verbatim.
    #[arg(long, default_value = "log-density", value_parser = parse_stencil)]
    stencil: StencilMode,
    /// Density-estimation evaluation point: mean or median.
    #[arg(long, default_value = "mean", value_parser = parse_point)]
    density_point: PointEstimate,
    /// BMA BMD summary: weighted-quantiles or mixture-cdf.
    #[arg(long, default_value = "weighted-quantiles", value_parser = parse_summary)]
    bmd_summary: BmdSummary,
    /// Skip the per-model BMD draw exports.
    #[arg(long)]
    no_draws: bool,
    /// Also write wall-clock timings to timings.json.
    #[arg(long)]
    timings: bool,
    /// Suppress the console tables.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Monte Carlo reference sample size.
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "nuts", value_parser = parse_sampler)]
    sampler: Sampler,
}

fn named<T>(kind: &str, s: &str, f: impl Fn(&str) -> Option<T>) -> std::result::Result<T, String> {
    f(s).ok_or_else(|| format!("unknown {kind} '{s}'"))
}

fn parse_prior(s: &str) -> std::result::Result<PriorFamily, String> {
    named("prior family", s, PriorFamily::from_name)
}

fn parse_model(s: &str) -> std::result::Result<ModelFamily, String> {
    named("model", s, ModelFamily::from_name)
}

fn parse_method(s: &str) -> std::result::Result<MlMethod, String> {
    named("method", s, MlMethod::from_name)
}

fn parse_sampler(s: &str) -> std::result::Result<Sampler, String> {
    named("sampler", s, Sampler::from_name)
}

fn parse_summary(s: &str) -> std::result::Result<BmdSummary, String> {
    named("BMD summary", s, BmdSummary::from_name)
}

fn parse_stencil(s: &str) -> std::result::Result<StencilMode, String> {
    match s {
        "log-density" => Ok(StencilMode::LogDensity),
        "verbatim" => Ok(StencilMode::Verbatim),
        _ => Err(format!("unknown stencil '{s}'")),
    }
}

fn parse_point(s: &str) -> std::result::Result<PointEstimate, String> {
    match s {
        "mean" => Ok(PointEstimate::Mean),
        "median" => Ok(PointEstimate::Median),
        _ => Err(format!("unknown point estimate '{s}'")),
    }
}

fn read_priors(path: &PathBuf) -> Result<Vec<PriorSpec>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let items = match value {
        serde_json::Value::Array(v) => v,
        other => vec![other],
    };
    if items.is_empty() {
        bail!("{} holds no prior specifications", path.display());
    }
    items.iter().map(|v| Ok(PriorSpec::from_json(&v.to_string())?)).collect()
}

impl CommonArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            bmr: self.bmr,
            mcmc: McmcConfig { sampler: self.sampler, chains: self.chains, iterations: self.iterations, warmup: self.warmup, ..Default::default() },
            mc_reference_samples: self.mc_samples,
            seed: self.seed,
            out_dir: Some(self.out.clone()),
            laplace_stencil: self.stencil,
            density_point: self.density_point,
            bmd_summary: self.bmd_summary,
            export_draws: !self.no_draws,
            ..Default::default()
        }
    }
}

fn finish(bundle: &ReportBundle, common: &CommonArgs) -> Result<ExitCode> {
    write_bundle(bundle, &common.out, !common.no_draws)?;
    if common.timings {
        write_timings(bundle, &common.out.join("timings.json"))?;
    }
    if !common.quiet {
        for a in &bundle.analyses {
            println!("== {} / {}", a.dataset.label(), a.prior.label());
            print!("{}", ml_table(a));
            print!("{}", bmd_table(a));
        }
    }
    let failures = bundle.failures();
    for f in &failures {
        eprintln!("failure: {f}");
    }
    eprintln!("wrote {}", common.out.display());
    Ok(if failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE_MARKER) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Fit(args) => {
            let mut cfg = RunConfig { dataset: args.dataset.clone(), prior: args.prior, model_priors: args.model_priors.clone(), ..args.common.config() };
            if let Some(methods) = &args.methods {
                cfg.methods = methods.clone();
            }
            if let Some(models) = &args.models {
                cfg.models = models.clone();
            }
            if let Some(path) = &args.prior_file {
                let specs = read_priors(path)?;
                cfg.models = specs.iter().map(|s| s.model).collect();
                cfg.prior = PriorFamily::Custom;
                cfg.custom_priors = Some(specs);
            }
            let bundle = run_analysis(&cfg)?;
            finish(&bundle, &args.common)
        }
        Command::ReproducePaper(common) => {
            let bundle = reproduce_paper(&common.config())?;
            finish(&bundle, &common)
        }
        Command::Oracle(args) => {
            let mcmc = McmcConfig { sampler: args.sampler, seed: args.seed, ..Default::default() };
            let checks = run_oracles(args.mc_samples, &mcmc);
            for c in &checks {
                println!(
                    "{} {:<16} value {:.6e} expected {:.6e} tolerance {:.3e} ({})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.expected,
                    c.tolerance,
                    c.detail
                );
            }
            Ok(if checks.iter().all(|c| c.pass) { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE_MARKER) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
