//! The four published datasets and CSV ingestion.

use std::path::Path;

use crate::error::{Error, Result};
use crate::inference::{DichotomousDataset, DoseGroup};

/// `(name, doses, group sizes, responders)`.
type Table = (&'static str, &'static [f64], &'static [u64], &'static [u64]);

const EMBEDDED: [Table; 4] = [
    ("dataset1", &[0.0, 0.25, 0.5, 1.0], &[15, 30, 29, 16], &[0, 5, 26, 16]),
    ("dataset2", &[0.0, 0.1, 0.334, 1.0], &[48, 46, 46, 41], &[0, 1, 4, 15]),
    ("dataset3", &[0.0, 0.167, 0.332, 0.665, 1.0], &[27, 28, 28, 28, 29], &[9, 20, 24, 27, 29]),
    ("dataset4", &[0.0, 0.25, 0.5, 1.0], &[20, 20, 20, 20], &[1, 2, 5, 11]),
];

pub const EMBEDDED_NAMES: [&str; 4] = ["dataset1", "dataset2", "dataset3", "dataset4"];

pub fn embedded_dataset(name: &str) -> Option<DichotomousDataset> {
    let (label, doses, ns, ys) = EMBEDDED.iter().find(|t| t.0 == name)?;
    let groups = doses.iter().zip(*ns).zip(*ys).map(|((&dose, &n), &y)| DoseGroup { dose, n, y }).collect();
    Some(DichotomousDataset::new(*label, groups).expect("embedded data are valid"))
}

/// An embedded dataset name, or else a path to a `dose,n,y` CSV file.
pub fn load_dataset(path_or_name: &str) -> Result<DichotomousDataset> {
    if let Some(d) = embedded_dataset(path_or_name) {
        return Ok(d);
    }
    let path = Path::new(path_or_name);
    if !path.exists() {
        return Err(Error::Input(format!(
            "`{path_or_name}` is neither an embedded dataset ({}) nor an existing file",
            EMBEDDED_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let label = path.file_stem().and_then(|s| s.to_str()).unwrap_or(path_or_name);
    DichotomousDataset::from_csv_str(label, &text)
}
