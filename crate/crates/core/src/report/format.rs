//! Table cell formatting.

/// Linear-scale ML below this prints as `0`.
pub const ZERO_BELOW: f64 = 1e-9;
/// Linear-scale ML above this prints as `+`.
pub const PLUS_ABOVE: f64 = 1e-3;
pub const FAILURE_MARK: &str = "-*";
/// Cell for a method that yields weights but no ML value.
pub const NO_VALUE_MARK: &str = "-";

/// An ML cell in units of 10⁻⁶: three significant figures, at most two decimals.
pub fn format_ml(log_ml: Option<f64>) -> String {
    let Some(log_ml) = log_ml else {
        return FAILURE_MARK.to_string();
    };
    let ml = log_ml.exp();
    if ml < ZERO_BELOW {
        return "0".to_string();
    }
    if ml > PLUS_ABOVE {
        return "+".to_string();
    }
    let x = ml * 1e6;
    let decimals = (2 - x.log10().floor() as i32).clamp(0, 2) as usize;
    format!("{x:.decimals$}")
}

/// Weight as a whole percentage.
pub fn format_weight(w: f64) -> String {
    format!("{:.0}", 100.0 * w)
}

/// A dose rounded to three decimals, `inf` for an unbounded quantile.
pub fn format_dose(d: f64) -> String {
    if d.is_finite() {
        format!("{d:.3}")
    } else {
        "inf".to_string()
    }
}

/// Full-precision float for machine-readable CSVs.
pub fn full(x: f64) -> String {
    if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ml_cells() {
        let cell = |ml: f64| format_ml(Some(ml.ln()));
        assert_eq!(cell(32.5e-6), "32.5");
        assert_eq!(cell(9.534e-6), "9.53");
        assert_eq!(cell(55.96e-6), "56.0");
        assert_eq!(cell(875.2e-6), "875");
        assert_eq!(cell(0.0123e-6), "0.01");
        assert_eq!(cell(0.9e-9), "0");
        assert_eq!(cell(1.1e-9), "0.00");
        assert_eq!(cell(1.001e-3), "+");
        assert_eq!(format_ml(Some(f64::NEG_INFINITY)), "0");
        assert_eq!(format_ml(None), "-*");
    }

    #[test]
    fn other_cells() {
        assert_eq!(format_weight(0.2449), "24");
        assert_eq!(format_weight(0.0), "0");
        assert_eq!(format_dose(0.27149), "0.271");
        assert_eq!(format_dose(f64::INFINITY), "inf");
        assert_eq!(full(0.5), "5e-1");
        assert_eq!(full(f64::NEG_INFINITY), "-inf");
    }
}
