use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_choose;

/// One dose group: dose level, animals and responders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoseGroup {
    pub dose: f64,
    pub n: u64,
    pub y: u64,
}

/// A dichotomous dose-response dataset with doses strictly ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomousDataset {
    label: String,
    groups: Vec<DoseGroup>,
    #[serde(skip)]
    ln_binom: Vec<f64>,
}

impl DichotomousDataset {
    /// Build and validate a dataset of at least two groups. Groups are
    /// sorted by dose; duplicate doses are rejected.
    pub fn new(label: impl Into<String>, groups: Vec<DoseGroup>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 dose groups, got {}", groups.len())));
        }
        Self::build(label.into(), groups)
    }

    /// A one-group dataset, used by the conjugate constant-response oracle.
    pub fn single_group(dose: f64, n: u64, y: u64) -> Result<Self> {
        Self::build(format!("single(n={n},y={y})"), vec![DoseGroup { dose, n, y }])
    }

    fn build(label: String, mut groups: Vec<DoseGroup>) -> Result<Self> {
        for g in &groups {
            if !(g.dose.is_finite() && g.dose >= 0.0) {
                return Err(Error::InvalidDataset(format!("dose {} must be finite and >= 0", g.dose)));
            }
            if g.n == 0 {
                return Err(Error::InvalidDataset(format!("dose {}: group size must be positive", g.dose)));
            }
            if g.y > g.n {
                return Err(Error::InvalidDataset(format!("dose {}: {} responders exceed {} animals", g.dose, g.y, g.n)));
            }
        }
        groups.sort_by(|a, b| a.dose.total_cmp(&b.dose));
        if let Some(w) = groups.windows(2).find(|w| w[0].dose == w[1].dose) {
            return Err(Error::InvalidDataset(format!("duplicate dose {}", w[0].dose)));
        }
        let ln_binom = groups.iter().map(|g| ln_choose(g.n, g.y)).collect();
        Ok(Self { label, groups, ln_binom })
    }

    /// Parse `dose,n,y` CSV. The header line is optional; blank lines are skipped.
    pub fn from_csv_str(label: impl Into<String>, text: &str) -> Result<Self> {
        let mut groups = Vec::new();
        let mut seen = std::collections::HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim().trim_start_matches('\u{feff}');
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if groups.is_empty() && seen.is_empty() && fields.first().is_some_and(|f| f.parse::<f64>().is_err()) {
                if fields != ["dose", "n", "y"] {
                    return Err(Error::Ingestion { line: line_no, reason: format!("expected header `dose,n,y`, got `{line}`") });
                }
                seen.insert(u64::MAX, line_no);
                continue;
            }
            let bad = |reason: String| Error::Ingestion { line: line_no, reason };
            if fields.len() != 3 {
                return Err(bad(format!("expected 3 fields, got {}", fields.len())));
            }
            let dose: f64 = fields[0].parse().map_err(|_| bad(format!("bad dose `{}`", fields[0])))?;
            let n: u64 = fields[1].parse().map_err(|_| bad(format!("bad group size `{}`", fields[1])))?;
            let y: u64 = fields[2].parse().map_err(|_| bad(format!("bad responder count `{}`", fields[2])))?;
            if !(dose.is_finite() && dose >= 0.0) {
                return Err(bad(format!("dose {dose} must be finite and >= 0")));
            }
            if n == 0 {
                return Err(bad("group size must be positive".into()));
            }
            if y > n {
                return Err(bad(format!("{y} responders exceed {n} animals")));
            }
            if let Some(prev) = seen.insert(dose.to_bits(), line_no) {
                return Err(bad(format!("duplicate dose {dose} (first seen on line {prev})")));
            }
            groups.push(DoseGroup { dose, n, y });
        }
        Self::new(label, groups)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn groups(&self) -> &[DoseGroup] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn max_dose(&self) -> f64 {
        self.groups.last().map_or(0.0, |g| g.dose)
    }

    /// `ln C(n_i, y_i)` per group.
    pub(crate) fn ln_binomials(&self) -> &[f64] {
        &self.ln_binom
    }

    /// Saturated log-likelihood: each group at its observed proportion.
    pub fn saturated_log_likelihood(&self) -> f64 {
        self.groups
            .iter()
            .zip(&self.ln_binom)
            .map(|(g, c)| {
                let p = g.y as f64 / g.n as f64;
                let mut v = *c;
                if g.y > 0 {
                    v += g.y as f64 * p.ln();
                }
                if g.y < g.n {
                    v += (g.n - g.y) as f64 * (1.0 - p).ln();
                }
                v
            })
            .sum()
    }

    /// One single-group dataset per dose group.
    pub fn split_groups(&self) -> Vec<DichotomousDataset> {
        self.groups
            .iter()
            .map(|g| Self::single_group(g.dose, g.n, g.y).expect("validated group"))
            .collect()
    }

    /// Render as `dose,n,y` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dose,n,y\n");
        for g in &self.groups {
            out.push_str(&format!("{},{},{}\n", g.dose, g.n, g.y));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_headerless_and_headed_csv() {
        let d = DichotomousDataset::from_csv_str("t", "0,10,0\n1,10,5").unwrap();
        assert_eq!(d.n_groups(), 2);
        assert_eq!(d.groups()[1], DoseGroup { dose: 1.0, n: 10, y: 5 });
        let d = DichotomousDataset::from_csv_str("t", "dose,n,y\n0.5,8,2\n0,8,0\n\n").unwrap();
        assert_eq!(d.groups()[0].dose, 0.0);
        assert_eq!(d.to_csv(), "dose,n,y\n0,8,0\n0.5,8,2\n");
    }

    #[test]
    fn ingestion_errors_carry_line_numbers() {
        let e = DichotomousDataset::from_csv_str("t", "dose,n,y\n0,10,0\n1,10,12\n").unwrap_err();
        assert_eq!(e, Error::Ingestion { line: 3, reason: "12 responders exceed 10 animals".into() });
        let e = DichotomousDataset::from_csv_str("t", "0,10,0\n0,10,1\n").unwrap_err();
        assert!(matches!(e, Error::Ingestion { line: 2, .. }));
        let e = DichotomousDataset::from_csv_str("t", "0,10\n").unwrap_err();
        assert!(matches!(e, Error::Ingestion { line: 1, .. }));
        let e = DichotomousDataset::from_csv_str("t", "0,ten,1\n").unwrap_err();
        assert!(matches!(e, Error::Ingestion { line: 1, .. }));
        assert!(matches!(
            DichotomousDataset::from_csv_str("t", "0,10,1\n"),
            Err(Error::InvalidDataset(_))
        ));
    }
}
