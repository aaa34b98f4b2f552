//! Writing a [`ReportBundle`] to disk.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::bma::WeightSource;
use crate::error::{Error, Result};
use crate::marginal::MlMethod;

use super::datasets::EMBEDDED_NAMES;
use super::format::{format_dose, format_ml, format_weight, full, FAILURE_MARK, NO_VALUE_MARK};
use super::{AnalysisReport, ReportBundle};

fn write(path: &Path, contents: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)?;
    Ok(path.to_path_buf())
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn weight_cell(a: &AnalysisReport, method: MlMethod, k: usize) -> String {
    match a.summary(WeightSource::Method(method)).map(|s| &s.weights) {
        Some(Ok(w)) => format_weight(w[k]),
        _ => FAILURE_MARK.to_string(),
    }
}

/// Rounded ML (×10⁻⁶) and weight (%) per model and method.
pub fn ml_table(a: &AnalysisReport) -> String {
    let mut out = String::from("model");
    for m in &a.methods {
        let _ = write!(out, ",{0},{0}_weight_pct", m.name());
    }
    out.push('\n');
    for (k, run) in a.models.iter().enumerate() {
        out.push_str(run.model.name());
        for &m in &a.methods {
            let ml = match run.estimate(m) {
                Some(e) => format_ml(e.log_ml()),
                None => NO_VALUE_MARK.to_string(),
            };
            let _ = write!(out, ",{ml},{}", weight_cell(a, m, k));
        }
        out.push('\n');
    }
    out
}

/// Full-precision ML estimates, one row per (model, method).
pub fn ml_values(a: &AnalysisReport) -> String {
    let mut out = String::from("model,method,log_ml,ml,mc_standard_error,weight,failure\n");
    for (k, run) in a.models.iter().enumerate() {
        for &m in &a.methods {
            let weight = match a.summary(WeightSource::Method(m)).map(|s| &s.weights) {
                Some(Ok(w)) => full(w[k]),
                _ => String::new(),
            };
            let (log_ml, se, failure) = match run.estimate(m) {
                Some(e) => (e.log_ml(), e.mc_standard_error, e.failure_reason().unwrap_or("").replace(',', ";")),
                None => (None, None, String::new()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{weight},{failure}",
                run.model.name(),
                m.name(),
                log_ml.map(full).unwrap_or_default(),
                log_ml.map(|v| full(v.exp())).unwrap_or_default(),
                se.map(full).unwrap_or_default(),
            );
        }
    }
    out
}

fn bma_rows(a: &AnalysisReport) -> Vec<(String, Option<(f64, f64, Option<f64>)>)> {
    a.summaries
        .iter()
        .map(|s| (s.source.name().to_string(), s.bma.as_ref().ok().map(|r| (r.bmd_estimate, r.bmdl, r.bmdu))))
        .collect()
}

/// Rounded BMA BMD, BMDL and BMDU per weight source.
pub fn bmd_table(a: &AnalysisReport) -> String {
    let mut out = String::from("method,bmd,bmdl,bmdu\n");
    for (name, row) in bma_rows(a) {
        match row {
            Some((bmd, bmdl, bmdu)) => {
                let _ = writeln!(out, "{name},{},{},{}", format_dose(bmd), format_dose(bmdl), format_dose(bmdu.unwrap_or(f64::INFINITY)));
            }
            None => {
                let _ = writeln!(out, "{name},{FAILURE_MARK},{FAILURE_MARK},{FAILURE_MARK}");
            }
        }
    }
    out
}

/// Per-model BMD posterior summaries and sampler diagnostics.
pub fn model_table(a: &AnalysisReport) -> String {
    let mut out = String::from("model,bmdl,bmd,bmdu,censored_fraction,max_rhat,min_ess,warnings\n");
    for run in &a.models {
        let _ = write!(out, "{}", run.model.name());
        match &run.bmd {
            Some(b) => {
                let _ = write!(
                    out,
                    ",{},{},{},{}",
                    full(b.bmdl),
                    full(b.bmd),
                    full(b.bmdu.unwrap_or(f64::INFINITY)),
                    full(b.censored_fraction)
                );
            }
            None => out.push_str(",,,,"),
        }
        match &run.posterior {
            Ok(p) => {
                let _ = writeln!(out, ",{},{},{}", full(p.max_rhat), full(p.min_ess), p.warnings.join("; ").replace(',', ";"));
            }
            Err(e) => {
                let _ = writeln!(out, ",,,{}", e.replace(',', ";"));
            }
        }
    }
    out
}

fn draws_csv(draws: &[f64]) -> String {
    let mut out = String::with_capacity(draws.len() * 22 + 4);
    out.push_str("bmd\n");
    for &d in draws {
        out.push_str(&full(d));
        out.push('\n');
    }
    out
}

/// Write every table, the full-precision report and the provenance block.
/// Timings are left out so that reruns are byte-identical; see [`write_timings`].
pub fn write_bundle(bundle: &ReportBundle, dir: &Path, export_draws: bool) -> Result<Vec<PathBuf>> {
    let mut files = vec![
        write(&dir.join("report.json"), &to_json(bundle)?)?,
        write(&dir.join("provenance.json"), &to_json(&bundle.provenance)?)?,
    ];
    let failures = bundle.failures();
    let mut text = failures.join("\n");
    if !text.is_empty() {
        text.push('\n');
    }
    files.push(write(&dir.join("failures.txt"), &text)?);
    for a in &bundle.analyses {
        let sub = dir.join(a.key());
        files.push(write(&sub.join("ml_table.csv"), &ml_table(a))?);
        files.push(write(&sub.join("ml_values.csv"), &ml_values(a))?);
        files.push(write(&sub.join("bmd_table.csv"), &bmd_table(a))?);
        files.push(write(&sub.join("models.csv"), &model_table(a))?);
        if export_draws {
            for run in a.models.iter().filter(|r| !r.bmd_draws.is_empty()) {
                let name = format!("bmd_{}.csv", run.model.name());
                files.push(write(&sub.join("draws").join(name), &draws_csv(&run.bmd_draws))?);
            }
        }
    }
    files.extend(emit_plot_data(bundle, &dir.join("plots"))?);
    Ok(files)
}

fn panel_name(a: &AnalysisReport) -> String {
    match EMBEDDED_NAMES.iter().position(|&n| n == a.dataset.label()) {
        Some(i) => format!("{}_panel_{}", a.prior.name(), (b'A' + i as u8) as char),
        None => a.key(),
    }
}

/// One CSV per figure panel with a row per weight source, and a companion
/// file holding the reference-value lines.
pub fn emit_plot_data(bundle: &ReportBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for a in &bundle.analyses {
        let panel = panel_name(a);
        let mut rows = String::from("method,bmd,bmdl,bmdu\n");
        for (name, row) in bma_rows(a) {
            let Some((bmd, bmdl, bmdu)) = row else { continue };
            let _ = writeln!(rows, "{name},{},{},{}", format_dose(bmd), format_dose(bmdl), format_dose(bmdu.unwrap_or(f64::INFINITY)));
        }
        files.push(write(&dir.join(format!("{panel}.csv")), &rows)?);
        if let Some(Ok(r)) = a.summary(WeightSource::Method(MlMethod::McReference)).map(|s| &s.bma) {
            let lines = format!("line,value\nbmd_reference,{}\nbmdl_reference,{}\n", format_dose(r.bmd_estimate), format_dose(r.bmdl));
            files.push(write(&dir.join(format!("{panel}_lines.csv")), &lines)?);
        }
    }
    Ok(files)
}

/// Wall-clock timings per analysis and step.
pub fn write_timings(bundle: &ReportBundle, path: &Path) -> Result<PathBuf> {
    let all: BTreeMap<String, &BTreeMap<String, f64>> = bundle.analyses.iter().map(|a| (a.key(), &a.timings)).collect();
    write(path, &to_json(&all)?)
}
