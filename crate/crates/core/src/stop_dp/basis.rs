//! Regression bases over the stage features.
//!
//! The base feature vector at stage `n` is
//! `[T_n, X(T_n), max_{m <= n} X(T_m), (Delta T, eta) for the last `window` events]`,
//! zero-padded when fewer events exist. A basis expands it, optionally after
//! standardising each coordinate with the training mean and deviation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    Constant,
    /// Powers of each feature up to `degree`, plus pairwise products when
    /// `degree >= 2`.
    Polynomial,
    /// Each feature and `degree` hinge functions `(z - kappa)^+` with knots
    /// spread evenly over `[-2, 2]` in standardised units.
    PiecewiseLinear,
}

impl BasisFamily {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "constant" => Ok(Self::Constant),
            "polynomial" => Ok(Self::Polynomial),
            "piecewise_linear" | "piecewise-linear" => Ok(Self::PiecewiseLinear),
            _ => Err(Error::Config(format!("unknown basis family `{name}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Constant => "constant",
            Self::Polynomial => "polynomial",
            Self::PiecewiseLinear => "piecewise_linear",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub degree: usize,
    pub window: usize,
    pub clip_bound: f64,
    #[serde(default = "default_standardize")]
    pub standardize: bool,
}

fn default_standardize() -> bool {
    true
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            family: BasisFamily::Polynomial,
            degree: 2,
            window: 0,
            clip_bound: 1e6,
            standardize: true,
        }
    }
}

impl BasisSpec {
    pub fn new(family: BasisFamily, degree: usize, window: usize, clip_bound: f64) -> Result<Self> {
        let spec = Self {
            family,
            degree,
            window,
            clip_bound,
            standardize: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(clip_bound: f64) -> Result<Self> {
        Self::new(BasisFamily::Constant, 0, 0, clip_bound)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.clip_bound > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "clip bound must be positive, got {}",
                self.clip_bound
            )));
        }
        if self.degree > 8 || self.window > 64 {
            return Err(Error::InvalidParameter(format!(
                "basis too large: degree {} window {}",
                self.degree, self.window
            )));
        }
        Ok(())
    }

    /// Length of the base feature vector.
    pub fn base_len(&self) -> usize {
        3 + 2 * self.window
    }

    /// Number of regression coefficients.
    pub fn feature_count(&self) -> usize {
        let m = self.base_len();
        match self.family {
            BasisFamily::Constant => 1,
            BasisFamily::Polynomial => {
                let pairs = if self.degree >= 2 { m * (m - 1) / 2 } else { 0 };
                1 + m * self.degree + pairs
            }
            BasisFamily::PiecewiseLinear => 1 + m * (1 + self.degree),
        }
    }

    /// VC dimension of the linear span, `feature_count + 1`; reported, never
    /// enforced.
    pub fn vc_bound(&self) -> usize {
        self.feature_count() + 1
    }

    fn knot(&self, l: usize) -> f64 {
        -2.0 + 4.0 * (l + 1) as f64 / (self.degree + 1) as f64
    }

    /// Expands standardised base features `z` into `out`.
    pub(crate) fn expand(&self, z: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.push(1.0);
        match self.family {
            BasisFamily::Constant => {}
            BasisFamily::Polynomial => {
                for &v in z {
                    let mut p = 1.0;
                    for _ in 0..self.degree {
                        p *= v;
                        out.push(p);
                    }
                }
                if self.degree >= 2 {
                    for i in 0..z.len() {
                        for j in i + 1..z.len() {
                            out.push(z[i] * z[j]);
                        }
                    }
                }
            }
            BasisFamily::PiecewiseLinear => {
                for &v in z {
                    out.push(v);
                    for l in 0..self.degree {
                        out.push((v - self.knot(l)).max(0.0));
                    }
                }
            }
        }
    }
}

/// Raw stage features from grid times, states and moves.
///
/// `times`, `states` and `running_max` are indexed by stage (`0..=e`);
/// `deltas[m - 1]` and `signs[m - 1]` describe event `m`.
pub fn base_features(
    window: usize,
    n: usize,
    times: &[f64],
    states: &[f64],
    running_max: &[f64],
    deltas: &[f64],
    signs: &[i8],
    out: &mut Vec<f64>,
) {
    out.clear();
    out.push(times[n]);
    out.push(states[n]);
    out.push(running_max[n]);
    for l in 0..window {
        if n > l {
            out.push(deltas[n - 1 - l]);
            out.push(signs[n - 1 - l] as f64);
        } else {
            out.push(0.0);
            out.push(0.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_counts_match_expansion() {
        let z = [0.3, -1.2, 2.5, 0.1, -0.4];
        for family in [BasisFamily::Constant, BasisFamily::Polynomial, BasisFamily::PiecewiseLinear] {
            for degree in 0..4 {
                let spec = BasisSpec {
                    family,
                    degree,
                    window: 1,
                    clip_bound: 1.0,
                    standardize: true,
                };
                let mut out = Vec::new();
                spec.expand(&z, &mut out);
                assert_eq!(out.len(), spec.feature_count(), "{family:?} degree {degree}");
            }
        }
    }

    #[test]
    fn window_pads_with_zeros() {
        let mut out = Vec::new();
        let times = [0.0, 0.1, 0.3];
        let states = [1.0, 1.5, 1.0];
        let maxima = [1.0, 1.5, 1.5];
        base_features(3, 2, &times, &states, &maxima, &[0.1, 0.2], &[1, -1], &mut out);
        assert_eq!(out, vec![0.3, 1.0, 1.5, 0.2, -1.0, 0.1, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn validation() {
        assert!(BasisSpec::constant(0.0).is_err());
        assert!(BasisSpec::new(BasisFamily::Polynomial, 9, 0, 1.0).is_err());
        assert_eq!(BasisFamily::parse("piecewise-linear").unwrap(), BasisFamily::PiecewiseLinear);
        assert!(BasisFamily::parse("splines").is_err());
    }
}
