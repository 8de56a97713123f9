//! Rate tables and their CSV form.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub k: u32,
    pub eps: f64,
    pub steps: usize,
    pub value: f64,
    pub value_se: f64,
    pub lower_bound: f64,
    pub lower_se: f64,
    pub reference: Option<f64>,
    pub abs_error: Option<f64>,
    /// Stages at which the regression needed the ridge fallback.
    pub ridge_stages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    /// Sorted by decreasing `eps`.
    pub rows: Vec<RateRow>,
    /// `crr`, `self-ref` or `none`.
    pub reference_label: String,
    /// Slope of `ln |value - reference|` against `ln eps`.
    pub slope: Option<f64>,
}

pub const CSV_HEADER: &str =
    "k,eps,steps,value,value_se,lower_bound,lower_se,reference_kind,reference,abs_error,ridge_stages";

/// `%.12g`.
pub fn fmt_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_g12).unwrap_or_default()
}

impl RateRow {
    pub fn csv_line(&self, reference_label: &str) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.k,
            fmt_g12(self.eps),
            self.steps,
            fmt_g12(self.value),
            fmt_g12(self.value_se),
            fmt_g12(self.lower_bound),
            fmt_g12(self.lower_se),
            reference_label,
            opt(self.reference),
            opt(self.abs_error),
            self.ridge_stages
        )
    }
}

impl RateReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for row in &self.rows {
            writeln!(out, "{}", row.csv_line(&self.reference_label))?;
        }
        Ok(())
    }

    /// Fills the reference and error columns and the slope.
    pub fn apply_reference(&mut self, reference: f64) {
        for row in &mut self.rows {
            row.reference = Some(reference);
            row.abs_error = Some((row.value - reference).abs());
        }
        let (eps, err): (Vec<f64>, Vec<f64>) = self
            .rows
            .iter()
            .filter_map(|r| r.abs_error.filter(|e| *e > 0.0).map(|e| (r.eps, e)))
            .unzip();
        self.slope = loglog_slope(&eps, &err);
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// usable points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_formatting() {
        assert_eq!(fmt_g12(0.0), "0");
        assert_eq!(fmt_g12(1.0), "1");
        assert_eq!(fmt_g12(0.25), "0.25");
        assert_eq!(fmt_g12(4.478123456789123), "4.47812345679");
        assert_eq!(fmt_g12(-123456.0), "-123456");
        assert_eq!(fmt_g12(1e-7), "1e-07");
        assert_eq!(fmt_g12(0.0001234), "0.0001234");
        assert_eq!(fmt_g12(1.5e15), "1.5e+15");
        assert_eq!(fmt_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_g12(999999999999.5), "1e+12");
    }

    #[test]
    fn synthetic_power_law_slope() {
        let eps = [0.5, 0.25, 0.125, 0.0625];
        let err: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e.powf(0.8)).collect();
        assert!((loglog_slope(&eps, &err).unwrap() - 0.8).abs() < 1e-6);
        assert_eq!(loglog_slope(&eps[..1], &err[..1]), None);
    }
}
