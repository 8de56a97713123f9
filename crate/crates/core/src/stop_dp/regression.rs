//! Least-squares continuation values.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::{BasisFamily, BasisSpec};
use crate::error::{Error, Result};

const RIDGE_FACTOR: f64 = 1e-10;
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Fitted continuation value at one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationModel {
    pub stage: usize,
    pub basis: BasisSpec,
    pub coefficients: Vec<f64>,
    /// Per-feature centring and scaling applied before expansion.
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    /// Whether the ridge fallback was needed.
    pub ridge: bool,
}

impl ContinuationModel {
    /// A model that predicts `value` everywhere.
    pub fn constant(stage: usize, value: f64, basis: BasisSpec) -> Self {
        let m = basis.base_len();
        let basis = BasisSpec {
            family: BasisFamily::Constant,
            degree: 0,
            ..basis
        };
        Self {
            stage,
            basis,
            coefficients: vec![value.clamp(-basis.clip_bound, basis.clip_bound)],
            shift: vec![0.0; m],
            scale: vec![1.0; m],
            ridge: false,
        }
    }

    pub fn predict(&self, base: &[f64]) -> f64 {
        let mut z = Vec::with_capacity(base.len());
        let mut row = Vec::with_capacity(self.coefficients.len());
        self.predict_with(base, &mut z, &mut row)
    }

    /// [`ContinuationModel::predict`] with caller-provided scratch buffers.
    pub fn predict_with(&self, base: &[f64], z: &mut Vec<f64>, row: &mut Vec<f64>) -> f64 {
        standardise(base, &self.shift, &self.scale, z);
        self.basis.expand(z, row);
        let v: f64 = row.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum();
        v.clamp(-self.basis.clip_bound, self.basis.clip_bound)
    }
}

fn standardise(base: &[f64], shift: &[f64], scale: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(base.iter().zip(shift.iter().zip(scale)).map(|(x, (m, s))| (x - m) / s));
}

/// Fits a model on explicit per-path base features.
pub fn fit_continuation(
    stage: usize,
    features: &[Vec<f64>],
    targets: &[f64],
    basis: &BasisSpec,
) -> Result<ContinuationModel> {
    if features.len() != targets.len() {
        return Err(Error::InvalidParameter(format!(
            "{} feature rows for {} targets",
            features.len(),
            targets.len()
        )));
    }
    if let Some(bad) = features.iter().find(|r| r.len() != basis.base_len()) {
        return Err(Error::InvalidParameter(format!(
            "feature rows must have length {}, got {}",
            basis.base_len(),
            bad.len()
        )));
    }
    fit_rows(stage, features.len(), basis, |i, out| {
        out.clear();
        out.extend_from_slice(&features[i]);
    }, |i| targets[i])
}

/// Fits from `rows` callbacks: `base(i, out)` writes the base features of
/// row `i` and `target(i)` its response.
pub(crate) fn fit_rows(
    stage: usize,
    rows: usize,
    basis: &BasisSpec,
    mut base: impl FnMut(usize, &mut Vec<f64>),
    target: impl Fn(usize) -> f64,
) -> Result<ContinuationModel> {
    basis.validate()?;
    if rows < 2 {
        return Err(Error::InvalidParameter(format!(
            "regression at stage {stage} needs at least 2 samples, got {rows}"
        )));
    }
    let m = basis.base_len();
    let mut buf = Vec::with_capacity(m);
    let (shift, scale) = if basis.standardize && basis.family != BasisFamily::Constant {
        let mut sum = vec![0.0; m];
        let mut sq = vec![0.0; m];
        for i in 0..rows {
            base(i, &mut buf);
            for k in 0..m {
                sum[k] += buf[k];
                sq[k] += buf[k] * buf[k];
            }
        }
        let n = rows as f64;
        let shift: Vec<f64> = sum.iter().map(|s| s / n).collect();
        let scale = sq
            .iter()
            .zip(&shift)
            .map(|(q, mu)| {
                let var = (q / n - mu * mu).max(0.0);
                let sd = var.sqrt();
                if sd > 1e-12 * (1.0 + mu.abs()) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        (shift, scale)
    } else {
        (vec![0.0; m], vec![1.0; m])
    };

    let p = basis.feature_count();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DVector::<f64>::zeros(p);
    let mut z = Vec::with_capacity(m);
    let mut row = Vec::with_capacity(p);
    for i in 0..rows {
        base(i, &mut buf);
        standardise(&buf, &shift, &scale, &mut z);
        basis.expand(&z, &mut row);
        let y = target(i);
        for a in 0..p {
            let ra = row[a];
            rhs[a] += ra * y;
            for b in a..p {
                gram[(a, b)] += ra * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let (coefficients, ridge) = solve_normal(gram, rhs, stage)?;
    Ok(ContinuationModel {
        stage,
        basis: *basis,
        coefficients,
        shift,
        scale,
        ridge,
    })
}

fn well_conditioned(gram: &DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let diag: Vec<f64> = (0..gram.nrows()).map(|i| gram[(i, i)]).collect();
    let chol = gram.clone().cholesky()?;
    let l = chol.l_dirty();
    let ok = diag
        .iter()
        .enumerate()
        .all(|(i, &d)| d > 0.0 && l[(i, i)] * l[(i, i)] > PIVOT_TOLERANCE * d);
    ok.then_some(chol)
}

fn solve_normal(gram: DMatrix<f64>, rhs: DVector<f64>, stage: usize) -> Result<(Vec<f64>, bool)> {
    if let Some(chol) = well_conditioned(&gram) {
        return Ok((chol.solve(&rhs).iter().copied().collect(), false));
    }
    let trace = gram.trace();
    let lambda = RIDGE_FACTOR * if trace > 0.0 { trace } else { 1.0 };
    let mut ridged = gram;
    for i in 0..ridged.nrows() {
        ridged[(i, i)] += lambda;
    }
    let chol = ridged.cholesky().ok_or_else(|| {
        Error::Numerical(format!("normal equations singular at stage {stage} even with ridge"))
    })?;
    Ok((chol.solve(&rhs).iter().copied().collect(), true))
}
