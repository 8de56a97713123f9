//! Cox–Ross–Rubinstein binomial pricing.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type PriceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Recombining binomial tree with a payoff on the price.
#[derive(Clone)]
pub struct CrrSpec {
    pub steps: usize,
    pub up: f64,
    pub down: f64,
    pub prob_up: f64,
    pub discount_per_step: f64,
    pub payoff: PriceFn,
}

impl fmt::Debug for CrrSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CrrSpec")
            .field("steps", &self.steps)
            .field("up", &self.up)
            .field("down", &self.down)
            .field("prob_up", &self.prob_up)
            .field("discount_per_step", &self.discount_per_step)
            .finish_non_exhaustive()
    }
}

impl CrrSpec {
    pub fn new(
        steps: usize,
        up: f64,
        down: f64,
        prob_up: f64,
        discount_per_step: f64,
        payoff: PriceFn,
    ) -> Result<Self> {
        if !(down <= up && prob_up > 0.0 && prob_up < 1.0 && discount_per_step > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "invalid tree: up {up}, down {down}, p {prob_up}, discount {discount_per_step}"
            )));
        }
        Ok(Self {
            steps,
            up,
            down,
            prob_up,
            discount_per_step,
            payoff,
        })
    }

    /// The usual risk-neutral tree `u = e^{sigma sqrt(dt)}`, `d = 1/u`.
    pub fn risk_neutral(rate: f64, sigma: f64, maturity: f64, steps: usize, payoff: PriceFn) -> Result<Self> {
        let dt = maturity / steps as f64;
        let up = (sigma * dt.sqrt()).exp();
        let down = 1.0 / up;
        let p = ((rate * dt).exp() - down) / (up - down);
        Self::new(steps, up, down, p, (-rate * dt).exp(), payoff)
    }
}

pub fn put_payoff(strike: f64) -> PriceFn {
    Arc::new(move |s| (strike - s).max(0.0))
}

fn price(spec: &CrrSpec, s0: f64, american: bool) -> f64 {
    let n = spec.steps;
    let ups: Vec<f64> = (0..=n).map(|j| spec.up.powi(j as i32)).collect();
    let downs: Vec<f64> = (0..=n).map(|j| spec.down.powi(j as i32)).collect();
    let node = |i: usize, j: usize| s0 * ups[j] * downs[i - j];
    let mut v: Vec<f64> = (0..=n).map(|j| (spec.payoff)(node(n, j))).collect();
    let (p, q) = (spec.prob_up, 1.0 - spec.prob_up);
    for i in (0..n).rev() {
        for j in 0..=i {
            let cont = spec.discount_per_step * (p * v[j + 1] + q * v[j]);
            v[j] = if american {
                cont.max((spec.payoff)(node(i, j)))
            } else {
                cont
            };
        }
        v.truncate(i + 1);
    }
    v[0]
}

pub fn crr_american(spec: &CrrSpec, s0: f64) -> f64 {
    price(spec, s0, true)
}

pub fn crr_european(spec: &CrrSpec, s0: f64) -> f64 {
    price(spec, s0, false)
}

/// Best expected discounted payoff over every stopping policy on the
/// non-recombining tree, by enumeration; at most 4 steps.
pub fn crr_exhaustive(spec: &CrrSpec, s0: f64) -> Result<f64> {
    let n = spec.steps;
    if n > 4 {
        return Err(Error::InvalidParameter(format!(
            "exhaustive enumeration is limited to 4 steps, got {n}"
        )));
    }
    // decision nodes: every history of length < n, indexed (1 << len) - 1 + bits
    let decision_nodes = (1usize << n) - 1;
    let mut best = f64::NEG_INFINITY;
    for policy in 0u64..1u64 << decision_nodes {
        let mut total = 0.0;
        for leaf in 0usize..1 << n {
            let mut s = s0;
            let mut prob = 1.0;
            let mut stopped = None;
            for len in 0..=n {
                if len == n {
                    stopped = Some((len, s));
                    break;
                }
                let id = (1usize << len) - 1 + (leaf & ((1 << len) - 1));
                if policy >> id & 1 == 1 {
                    stopped = Some((len, s));
                    break;
                }
                if leaf >> len & 1 == 1 {
                    s *= spec.up;
                    prob *= spec.prob_up;
                } else {
                    s *= spec.down;
                    prob *= 1.0 - spec.prob_up;
                }
            }
            let (len, s) = stopped.expect("every branch stops by the last step");
            // probability of the unexplored tail sums to 1
            total += prob * spec.discount_per_step.powi(len as i32) * (spec.payoff)(s)
                * tail_weight(leaf, len, n);
        }
        best = best.max(total);
    }
    Ok(best)
}

// Each leaf that stops at `len` shares its prefix with 2^(n - len) leaves;
// counting only the one whose tail bits are all zero avoids double counting.
fn tail_weight(leaf: usize, len: usize, n: usize) -> f64 {
    if leaf >> len == 0 || len == n {
        1.0
    } else {
        0.0
    }
}
