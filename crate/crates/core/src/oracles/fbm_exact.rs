//! Exact fractional Brownian motion on a finite grid by Cholesky
//! factorisation of its covariance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const JITTER: f64 = 1e-12;

/// `(t^{2H} + s^{2H} - |t - s|^{2H}) / 2`.
pub fn fbm_covariance(hurst: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * hurst;
    0.5 * (t.powf(h2) + s.powf(h2) - (t - s).abs().powf(h2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FbmExactPath {
    /// Grid starting at 0.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Cholesky factor of the covariance at the positive grid times.
#[derive(Debug, Clone)]
pub struct FbmSampler {
    hurst: f64,
    times: Vec<f64>,
    factor: DMatrix<f64>,
    jittered: bool,
}

impl FbmSampler {
    /// `grid` must be increasing; a leading zero is optional.
    pub fn new(hurst: f64, grid: &[f64]) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Hurst index must lie in (0, 1), got {hurst}"
            )));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.first().is_some_and(|&t| t < 0.0) {
            return Err(Error::InvalidParameter("grid must be increasing and non-negative".into()));
        }
        let times: Vec<f64> = grid.iter().copied().filter(|&t| t > 0.0).collect();
        if times.is_empty() {
            return Err(Error::InvalidParameter("grid has no positive time".into()));
        }
        let n = times.len();
        let cov = DMatrix::from_fn(n, n, |i, j| fbm_covariance(hurst, times[i], times[j]));
        let (factor, jittered) = match cov.clone().cholesky() {
            Some(c) => (c.unpack(), false),
            None => {
                let mut cov = cov;
                for i in 0..n {
                    cov[(i, i)] += JITTER;
                }
                let c = cov.cholesky().ok_or_else(|| {
                    Error::Numerical("fBm covariance not positive definite after jitter".into())
                })?;
                (c.unpack(), true)
            }
        };
        Ok(Self {
            hurst,
            times,
            factor,
            jittered,
        })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn jittered(&self) -> bool {
        self.jittered
    }

    /// `max |L L^T - Sigma|`.
    pub fn residual(&self) -> f64 {
        let llt = &self.factor * self.factor.transpose();
        let mut worst = 0.0f64;
        for i in 0..self.times.len() {
            for j in 0..self.times.len() {
                let c = fbm_covariance(self.hurst, self.times[i], self.times[j]);
                worst = worst.max((llt[(i, j)] - c).abs());
            }
        }
        worst
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FbmExactPath {
        let n = self.times.len();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let mut times = Vec::with_capacity(n + 1);
        let mut values = Vec::with_capacity(n + 1);
        times.push(0.0);
        values.push(0.0);
        for i in 0..n {
            let row = self.factor.row(i);
            values.push((0..=i).map(|j| row[j] * z[j]).sum());
            times.push(self.times[i]);
        }
        FbmExactPath { times, values }
    }
}

/// One exact fBm path on `grid`.
pub fn fbm_exact<R: Rng + ?Sized>(hurst: f64, grid: &[f64], rng: &mut R) -> Result<FbmExactPath> {
    Ok(FbmSampler::new(hurst, grid)?.sample(rng))
}
