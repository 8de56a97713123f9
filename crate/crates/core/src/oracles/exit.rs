//! Closed forms for the exit time of Brownian motion from `(-1, 1)`.

use crate::error::{Error, Result};

/// `E[exp(lambda tau)] = 1 / cosh(sqrt(2 |lambda|))` for `lambda <= 0`.
pub fn exit_mgf(lambda: f64) -> Result<f64> {
    if !(lambda <= 0.0) {
        return Err(Error::Domain(format!(
            "the exit-time transform is finite here only for lambda <= 0, got {lambda}"
        )));
    }
    Ok(1.0 / (2.0 * -lambda).sqrt().cosh())
}

fn log_cosh(u: f64) -> f64 {
    u + (-2.0 * u).exp().ln_1p() - std::f64::consts::LN_2
}

// objective in u = sqrt(-2 lambda)
fn objective(x: f64, u: f64) -> f64 {
    -0.5 * u * u * x + log_cosh(u)
}

/// `I*(x) = sup_{lambda < 0} [lambda x - ln E exp(lambda tau)]` for
/// `0 < x < 1`.
///
/// With `u = sqrt(-2 lambda)` the objective is `-u^2 x / 2 + ln cosh u`,
/// concave in `lambda`, with its maximiser where `tanh(u) / u = x`.
pub fn legendre_i_star(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!(
            "I* is evaluated only on (0, 1), got {x}"
        )));
    }
    // tanh(u)/u < x once u > 1/x
    let (mut a, mut b) = (0.0, 1.0 / x + 1.0);
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    while b - a > 1e-6 {
        // unimodal in u because u is monotone in lambda
        if objective(x, c) > objective(x, d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    let mut u = 0.5 * (a + b);
    for _ in 0..50 {
        let h = u.tanh() - u * x;
        let dh = 1.0 / u.cosh().powi(2) - x;
        if dh == 0.0 {
            break;
        }
        let step = h / dh;
        let next = u - step;
        if !(next > 0.0) {
            break;
        }
        u = next;
        if step.abs() < 1e-15 * u.max(1.0) {
            break;
        }
    }
    Ok(objective(x, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mgf_values() {
        assert_eq!(exit_mgf(0.0).unwrap(), 1.0);
        assert!((exit_mgf(-1.0).unwrap() - 0.4591).abs() < 1e-4);
        assert!(exit_mgf(0.1).is_err());
        let mut prev = 1.0;
        for k in 1..50 {
            let v = exit_mgf(-0.2 * k as f64).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn i_star_against_grid_search() {
        // brute force over lambda in [-20, 0) at resolution 1e-6
        let x = 0.5;
        let mut best = f64::NEG_INFINITY;
        let mut i = 1u32;
        while i <= 20_000_000 {
            let lambda = -(i as f64) * 1e-6;
            let v = lambda * x + (2.0 * -lambda).sqrt().cosh().ln();
            best = best.max(v);
            i += 1;
        }
        let v = legendre_i_star(x).unwrap();
        assert!((v - best).abs() < 1e-6, "{v} vs {best}");
        assert!((v - 0.327).abs() < 1e-3);
    }

    #[test]
    fn i_star_shape() {
        assert!(legendre_i_star(1.0).is_err());
        assert!(legendre_i_star(0.0).is_err());
        assert!(legendre_i_star(1.0 - 1e-6).unwrap() < 1e-9);
        let mut prev = f64::INFINITY;
        for k in 1..100 {
            let v = legendre_i_star(k as f64 / 100.0).unwrap();
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }
}
