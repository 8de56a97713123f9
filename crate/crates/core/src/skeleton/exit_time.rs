//! Exact sampling of the first exit time of standard Brownian motion from
//! `(-1, 1)`.
//!
//! The law has no closed-form quantile function, so draws are produced by
//! numerically inverting the distribution function. Two convergent series are
//! available for the distribution function: the method-of-images series,
//! which converges fast for small `t`, and the eigenfunction series, which
//! converges fast for large `t`. We switch between them at `t = 0.64`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::distr::Open01;
use rand::Rng;

use crate::error::{Error, Result};

/// Crossover between the small-time and large-time series.
pub const SERIES_SWITCH: f64 = 0.64;
/// Series are truncated once a term falls below this magnitude.
pub const TERM_TOLERANCE: f64 = 1e-12;
/// Convergence threshold of the Newton polish on the draw.
pub const NEWTON_TOLERANCE: f64 = 1e-10;

const MAX_TERMS: usize = 200;
const MAX_ITERATIONS: usize = 200;
const TABLE_BUCKETS: usize = 1024;
// P(tau > 60) ~ 1e-32, far below the resolution of a double-precision uniform.
const UPPER_BRACKET: f64 = 60.0;

fn small_time_cdf(t: f64) -> f64 {
    let scale = 1.0 / (2.0 * t).sqrt();
    let mut sum = 0.0;
    for n in 0..MAX_TERMS {
        let term = libm::erfc((2 * n + 1) as f64 * scale);
        if n % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < TERM_TOLERANCE {
            break;
        }
    }
    2.0 * sum
}

fn large_time_survival(t: f64) -> f64 {
    let base = PI * PI * t / 8.0;
    let mut sum = 0.0;
    for n in 0..MAX_TERMS {
        let m = (2 * n + 1) as f64;
        let term = (-m * m * base).exp() / m;
        if n % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < TERM_TOLERANCE {
            break;
        }
    }
    4.0 / PI * sum
}

/// `P(tau <= t)`.
pub fn exit_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t < SERIES_SWITCH {
        small_time_cdf(t)
    } else {
        1.0 - large_time_survival(t)
    }
}

/// `P(tau > t)`, accurate in the far tail.
pub fn exit_survival(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t < SERIES_SWITCH {
        1.0 - small_time_cdf(t)
    } else {
        large_time_survival(t)
    }
}

/// Density of the exit time.
pub fn exit_density(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    if t < SERIES_SWITCH {
        let pref = 1.0 / (2.0 * PI * t * t * t).sqrt();
        for n in 0..MAX_TERMS {
            let m = (2 * n + 1) as f64;
            let term = m * pref * (-m * m / (2.0 * t)).exp();
            if n % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            if term < TERM_TOLERANCE {
                break;
            }
        }
        2.0 * sum
    } else {
        let base = PI * PI * t / 8.0;
        for n in 0..MAX_TERMS {
            let m = (2 * n + 1) as f64;
            let term = m * (-m * m * base).exp();
            if n % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
            if term < TERM_TOLERANCE {
                break;
            }
        }
        PI / 2.0 * sum
    }
}

/// Signed distance between the distribution function at `t` and the level
/// `u`, evaluated on the side (lower or upper tail) that keeps precision.
fn residual(t: f64, u: f64) -> f64 {
    if u <= 0.5 {
        exit_cdf(t) - u
    } else {
        (1.0 - u) - exit_survival(t)
    }
}

fn bisect(u: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if residual(mid, u) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Quantiles at `i / TABLE_BUCKETS`, used to bracket each inversion.
fn quantile_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(TABLE_BUCKETS + 1);
        table.push(0.0);
        for i in 1..TABLE_BUCKETS {
            let u = i as f64 / TABLE_BUCKETS as f64;
            let lo = *table.last().unwrap();
            table.push(bisect(u, lo, UPPER_BRACKET));
        }
        table.push(UPPER_BRACKET);
        table
    })
}

/// Inverts the exit-time distribution function at `u ∈ (0, 1)`.
///
/// The bracket comes from a precomputed quantile table and is refined by
/// Newton steps, falling back to bisection whenever a step leaves the
/// bracket.
pub fn exit_time_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
    }
    let table = quantile_table();
    let bucket = ((u * TABLE_BUCKETS as f64) as usize).min(TABLE_BUCKETS - 1);
    let mut lo = table[bucket];
    let mut hi = table[bucket + 1];
    let mut t = 0.5 * (lo + hi);
    for _ in 0..MAX_ITERATIONS {
        let r = residual(t, u);
        if r > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let f = exit_density(t);
        let mut next = if f > 0.0 { t - r / f } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= NEWTON_TOLERANCE * t.max(1.0) || hi - lo <= NEWTON_TOLERANCE {
            return Ok(next);
        }
        t = next;
    }
    Err(Error::SamplerFailure {
        u,
        iterations: MAX_ITERATIONS,
    })
}

/// One draw of `inf { t : |B(t)| = 1 }`.
pub fn sample_unit_exit_time<R: Rng + ?Sized>(rng: &mut R) -> Result<f64> {
    let u: f64 = rng.sample(Open01);
    exit_time_quantile(u)
}

/// One `(delta, sign)` increment of the skeleton at level `eps`: the time
/// Brownian motion needs to move by `eps`, and the direction it moved in.
pub fn sample_increment<R: Rng + ?Sized>(rng: &mut R, eps: f64) -> Result<(f64, i8)> {
    debug_assert!(eps > 0.0);
    let tau = sample_unit_exit_time(rng)?;
    let sign = if rng.random::<bool>() { 1 } else { -1 };
    Ok((eps * eps * tau, sign))
}
