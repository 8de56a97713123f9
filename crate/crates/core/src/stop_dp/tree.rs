//! Exact dynamic programming on the deterministic clock.
//!
//! With every inter-event time frozen at `eps^2` the one-dimensional walk is
//! a binary tree with probability 1/2 per branch, so conditional
//! expectations are finite averages and the value process can be computed
//! exactly. Node `idx` at stage `n` encodes the first `n` moves: bit `i` set
//! means move `i + 1` was up.

use crate::error::{Error, Result};
use crate::skeleton::Skeleton;
use crate::state_models::{euler_path, reward_path, CoefficientSpec, RewardFunctional};

pub const MAX_TREE_STAGES: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactTreeResult {
    pub eps: f64,
    pub stages: usize,
    /// `states[n][idx]`.
    pub states: Vec<Vec<f64>>,
    /// `Z(T_n ^ T)` per node.
    pub rewards: Vec<Vec<f64>>,
    /// The value process `S` per node.
    pub values: Vec<Vec<f64>>,
    /// `E[S_{n+1} | node]` for `n < stages`.
    pub continuation: Vec<Vec<f64>>,
    /// `max{(E[S_{n+1} | node] - S_n) / eps^2, Z_n - S_n}`, and `Z - S` at
    /// the last stage.
    pub residuals: Vec<Vec<f64>>,
}

impl ExactTreeResult {
    pub fn value(&self) -> f64 {
        self.values[0][0]
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residuals
            .iter()
            .flatten()
            .fold(0.0f64, |m, r| m.max(r.abs()))
    }

    /// `S = Z` at every terminal node.
    pub fn terminal_matches(&self) -> bool {
        let e = self.stages;
        self.values[e] == self.rewards[e]
    }

    /// Stop exactly where the reward reaches the continuation value.
    pub fn policy(&self) -> TreePolicy {
        let e = self.stages;
        let mut stop: Vec<Vec<bool>> = (0..e)
            .map(|n| {
                self.rewards[n]
                    .iter()
                    .zip(&self.continuation[n])
                    .map(|(z, c)| z >= c)
                    .collect()
            })
            .collect();
        stop.push(vec![true; 1 << e]);
        TreePolicy {
            stop,
            rewards: self.rewards.clone(),
        }
    }
}

/// A stopping rule on the tree, one decision per node.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePolicy {
    stop: Vec<Vec<bool>>,
    rewards: Vec<Vec<f64>>,
}

impl TreePolicy {
    pub fn stages(&self) -> usize {
        self.stop.len() - 1
    }

    pub fn stops(&self, n: usize, idx: usize) -> bool {
        self.stop[n][idx]
    }

    /// Stopping stage along the branch ending in `leaf`.
    pub fn stopping_time(&self, leaf: usize) -> usize {
        (0..=self.stages())
            .find(|&n| self.stop[n][leaf & ((1 << n) - 1)])
            .expect("the last stage always stops")
    }

    /// Expected reward by backward averaging.
    pub fn value(&self) -> f64 {
        let e = self.stages();
        let mut w = self.rewards[e].clone();
        for n in (0..e).rev() {
            let half = 1usize << n;
            w = (0..half)
                .map(|idx| {
                    if self.stop[n][idx] {
                        self.rewards[n][idx]
                    } else {
                        0.5 * (w[idx] + w[idx | half])
                    }
                })
                .collect();
        }
        w[0]
    }

    /// Expected reward as the average over all leaves.
    pub fn leaf_average(&self) -> f64 {
        let e = self.stages();
        let total: f64 = (0..1usize << e)
            .map(|leaf| {
                let n = self.stopping_time(leaf);
                self.rewards[n][leaf & ((1 << n) - 1)]
            })
            .sum();
        total / (1u64 << e) as f64
    }
}

/// Exact value process of the deterministic-clock scheme started at `x0`.
pub fn exact_tree_dp(
    eps: f64,
    stages: usize,
    spec: &CoefficientSpec,
    reward: &RewardFunctional,
    horizon: f64,
    x0: f64,
) -> Result<ExactTreeResult> {
    if stages > MAX_TREE_STAGES {
        return Err(Error::TreeTooLarge {
            stages,
            limit: MAX_TREE_STAGES,
        });
    }
    if stages == 0 {
        return Err(Error::InvalidParameter("the tree needs at least one stage".into()));
    }
    let e = stages;
    let mut states: Vec<Vec<f64>> = (0..=e).map(|n| vec![0.0; 1 << n]).collect();
    let mut rewards = states.clone();
    let mut signs = vec![0i8; e];
    for leaf in 0..1usize << e {
        for (i, s) in signs.iter_mut().enumerate() {
            *s = if leaf >> i & 1 == 1 { 1 } else { -1 };
        }
        let sk = Skeleton::deterministic_clock(eps, &signs)?;
        let x = euler_path(spec, &sk, x0, e)?;
        let z = reward_path(reward, &x, &sk, horizon, e)?;
        for n in 0..=e {
            let idx = leaf & ((1 << n) - 1);
            states[n][idx] = x.values[n];
            rewards[n][idx] = z.values[n];
        }
    }
    let mut values = vec![Vec::new(); e + 1];
    let mut continuation = vec![Vec::new(); e];
    let mut residuals = vec![Vec::new(); e + 1];
    values[e] = rewards[e].clone();
    residuals[e] = vec![0.0; 1 << e];
    let h = eps * eps;
    for n in (0..e).rev() {
        let half = 1usize << n;
        let next = &values[n + 1];
        let cont: Vec<f64> = (0..half).map(|idx| 0.5 * (next[idx] + next[idx | half])).collect();
        let s: Vec<f64> = rewards[n].iter().zip(&cont).map(|(z, c)| z.max(*c)).collect();
        residuals[n] = (0..half)
            .map(|idx| ((cont[idx] - s[idx]) / h).max(rewards[n][idx] - s[idx]))
            .collect();
        continuation[n] = cont;
        values[n] = s;
    }
    residuals[e] = rewards[e]
        .iter()
        .zip(&values[e])
        .map(|(z, s)| z - s)
        .collect();
    Ok(ExactTreeResult {
        eps,
        stages: e,
        states,
        rewards,
        values,
        continuation,
        residuals,
    })
}
