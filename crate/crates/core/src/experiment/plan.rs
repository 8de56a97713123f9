//! Step planning for an error budget with `eps_k = 2^-k`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::skeleton::num_steps;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plan {
    /// Level index, truncated to two decimals.
    pub k_star: f64,
    pub eps: f64,
    pub steps: usize,
}

/// `k* = -log2(e1) / (1 - 2 lambda)`, truncated to two decimals, and the
/// number of one-dimensional skeleton steps covering `horizon` at
/// `eps = 2^-k*`.
///
/// With `hurst` given, `lambda` must lie in `(hurst - 1/2, 1/2)`; otherwise
/// in `(0, 1/2)`.
pub fn plan_steps(e1: f64, lambda: f64, horizon: f64, hurst: Option<f64>) -> Result<Plan> {
    if !(e1 > 0.0 && e1 < 1.0) {
        return Err(Error::Domain(format!("error budget must lie in (0, 1), got {e1}")));
    }
    let lower = hurst.map_or(0.0, |h| h - 0.5);
    if !(lambda > lower && lambda < 0.5) {
        return Err(Error::Domain(format!(
            "lambda must lie in ({lower}, 1/2), got {lambda}"
        )));
    }
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let raw = -e1.log2() / (1.0 - 2.0 * lambda);
    let k_star = (raw * 100.0 + 1e-9).floor() / 100.0;
    let eps = 2f64.powf(-k_star);
    Ok(Plan {
        k_star,
        eps,
        steps: num_steps(eps, horizon, 1),
    })
}

/// `ln(N) N^{-2 / (1 + e)}` for `N` training paths and `e` steps.
pub fn regression_error_term(train_paths: usize, steps: usize) -> f64 {
    let n = train_paths as f64;
    n.ln() * n.powf(-2.0 / (1.0 + steps as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_examples() {
        let p = plan_steps(0.40, 0.15, 1.0, Some(0.6)).unwrap();
        assert_eq!(p.k_star, 1.88);
        assert_eq!(p.steps, 14);
        let p = plan_steps(0.2, 0.15, 1.0, Some(0.6)).unwrap();
        assert_eq!(p.k_star, 3.31);
        assert_eq!(p.steps, 99);
    }

    #[test]
    fn looser_budget_needs_fewer_steps() {
        let mut prev = usize::MAX;
        for e1 in [0.05, 0.2, 0.5, 0.9, 0.999] {
            let p = plan_steps(e1, 0.15, 1.0, Some(0.6)).unwrap();
            assert!(p.steps <= prev);
            prev = p.steps;
        }
        let p = plan_steps(1.0 - 1e-9, 0.15, 1.0, Some(0.6)).unwrap();
        assert_eq!(p.k_star, 0.0);
        assert_eq!(p.steps, 1);
    }

    #[test]
    fn lambda_window() {
        assert!(plan_steps(0.4, 0.05, 1.0, Some(0.6)).is_err());
        assert!(plan_steps(0.4, 0.5, 1.0, Some(0.6)).is_err());
        assert!(plan_steps(0.4, 0.1, 1.0, None).is_ok());
        assert!(plan_steps(1.0, 0.15, 1.0, None).is_err());
    }

    #[test]
    fn regression_term() {
        let v = regression_error_term(1000, 3);
        assert!((v - 1000f64.ln() / 1000f64.sqrt()).abs() < 1e-15);
    }
}
