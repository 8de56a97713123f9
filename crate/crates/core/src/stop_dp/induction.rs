//! Regression-based backward induction over simulated paths.

use super::basis::{base_features, BasisSpec};
use super::regression::{fit_rows, ContinuationModel};
use crate::error::{Error, Result};
use crate::skeleton::Skeleton;
use crate::state_models::{RewardPath, StatePath};

/// Simulated paths with `stages + 1` grid values each, stored path-major.
#[derive(Debug, Clone)]
pub struct PathBatch {
    stages: usize,
    window: usize,
    paths: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    running_max: Vec<f64>,
    rewards: Vec<f64>,
    deltas: Vec<f64>,
    signs: Vec<i8>,
}

impl PathBatch {
    /// An empty batch; `window` is the number of recent events kept for
    /// features.
    pub fn new(stages: usize, window: usize) -> Self {
        Self {
            stages,
            window,
            paths: 0,
            times: Vec::new(),
            states: Vec::new(),
            running_max: Vec::new(),
            rewards: Vec::new(),
            deltas: Vec::new(),
            signs: Vec::new(),
        }
    }

    pub fn with_capacity(stages: usize, window: usize, paths: usize) -> Self {
        let mut b = Self::new(stages, window);
        let nodes = paths * (stages + 1);
        b.times.reserve_exact(nodes);
        b.states.reserve_exact(nodes);
        b.running_max.reserve_exact(nodes);
        b.rewards.reserve_exact(nodes);
        if window > 0 {
            b.deltas.reserve_exact(paths * stages);
            b.signs.reserve_exact(paths * stages);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.paths
    }

    pub fn is_empty(&self) -> bool {
        self.paths == 0
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Appends one path. `times`, `states` and `rewards` have `stages + 1`
    /// entries; `deltas` and `signs` have `stages`.
    pub fn push(
        &mut self,
        times: &[f64],
        states: &[f64],
        rewards: &[f64],
        deltas: &[f64],
        signs: &[i8],
    ) -> Result<()> {
        let e = self.stages;
        if times.len() != e + 1 || states.len() != e + 1 || rewards.len() != e + 1 {
            return Err(Error::InvalidParameter(format!(
                "path arrays must have {} entries, got {}/{}/{}",
                e + 1,
                times.len(),
                states.len(),
                rewards.len()
            )));
        }
        if self.window > 0 && (deltas.len() != e || signs.len() != e) {
            return Err(Error::InvalidParameter(format!(
                "feature window needs {e} deltas and signs"
            )));
        }
        self.times.extend_from_slice(times);
        self.states.extend_from_slice(states);
        self.rewards.extend_from_slice(rewards);
        let mut m = f64::NEG_INFINITY;
        for &x in states {
            m = m.max(x);
            self.running_max.push(m);
        }
        if self.window > 0 {
            self.deltas.extend_from_slice(deltas);
            self.signs.extend_from_slice(signs);
        }
        self.paths += 1;
        Ok(())
    }

    /// Appends the first `stages` events of a simulated path.
    pub fn push_skeleton(&mut self, s: &Skeleton, x: &StatePath, z: &RewardPath) -> Result<()> {
        let e = self.stages;
        if s.len() < e || x.values.len() < e + 1 || z.values.len() < e + 1 {
            return Err(Error::InvalidParameter(format!(
                "path shorter than {e} stages"
            )));
        }
        let mut times = Vec::with_capacity(e + 1);
        times.push(0.0);
        times.extend_from_slice(&s.times()[..e]);
        let signs: Vec<i8> = s.moves()[..e].iter().map(|m| m.sign()).collect();
        self.push(&times, &x.values[..=e], &z.values[..=e], &s.deltas()[..e], &signs)
    }

    fn row(&self, i: usize) -> std::ops::Range<usize> {
        let w = self.stages + 1;
        i * w..(i + 1) * w
    }

    pub fn reward(&self, i: usize, j: usize) -> f64 {
        self.rewards[i * (self.stages + 1) + j]
    }

    pub fn rewards(&self, i: usize) -> &[f64] {
        &self.rewards[self.row(i)]
    }

    pub fn times(&self, i: usize) -> &[f64] {
        &self.times[self.row(i)]
    }

    pub fn states(&self, i: usize) -> &[f64] {
        &self.states[self.row(i)]
    }

    /// Base features of path `i` at stage `j` for a basis with `window`
    /// (at most the batch window).
    pub fn base(&self, i: usize, j: usize, window: usize, out: &mut Vec<f64>) {
        let r = self.row(i);
        let (deltas, signs): (&[f64], &[i8]) = if self.window > 0 {
            let ev = i * self.stages..(i + 1) * self.stages;
            (&self.deltas[ev.clone()], &self.signs[ev])
        } else {
            (&[], &[])
        };
        base_features(
            window.min(self.window),
            j,
            &self.times[r.clone()],
            &self.states[r.clone()],
            &self.running_max[r],
            deltas,
            signs,
            out,
        );
        out.resize(3 + 2 * window, 0.0);
    }
}

/// The fitted rule `stop at j iff Z_j >= U_j(features_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingPolicy {
    /// Models for stages `0..stages`; stage 0 is constant.
    pub models: Vec<ContinuationModel>,
    pub stages: usize,
    /// Only stop where the reward is positive.
    pub itm_only: bool,
}

impl StoppingPolicy {
    pub fn stops(&self, j: usize, reward: f64, base: &[f64]) -> bool {
        if j >= self.stages {
            return true;
        }
        if self.itm_only && reward <= 0.0 {
            return false;
        }
        reward >= self.models[j].predict(base)
    }

    /// First stage at which path `i` of `batch` stops, `stages` if none.
    pub fn stopping_time(&self, batch: &PathBatch, i: usize) -> usize {
        let window = self.models.first().map_or(0, |m| m.basis.window);
        let mut base = Vec::new();
        let mut z = Vec::new();
        let mut row = Vec::new();
        for j in 0..self.stages {
            let reward = batch.reward(i, j);
            if self.itm_only && reward <= 0.0 {
                continue;
            }
            batch.base(i, j, window, &mut base);
            if reward >= self.models[j].predict_with(&base, &mut z, &mut row) {
                return j;
            }
        }
        self.stages
    }
}

/// Per-path, per-stage stop decisions.
#[derive(Debug, Clone, PartialEq)]
pub struct StopFlags {
    stages: usize,
    bits: Vec<bool>,
}

impl StopFlags {
    pub fn get(&self, path: usize, stage: usize) -> bool {
        self.bits[path * (self.stages + 1) + stage]
    }

    fn set(&mut self, path: usize, stage: usize, v: bool) {
        self.bits[path * (self.stages + 1) + stage] = v;
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanEstimate {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl MeanEstimate {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &MeanEstimate) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Standard error with the unbiased variance; zero below two samples.
    pub fn se(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DPResult {
    /// `max{Z_0, U_0}`.
    pub value: f64,
    /// Standard error of the stage-0 continuation mean.
    pub value_se: f64,
    pub policy: StoppingPolicy,
    pub stop_flags: StopFlags,
    pub tau_index: Vec<usize>,
    /// Per-node residuals, exact mode only.
    pub residuals: Option<Vec<Vec<f64>>>,
}

impl DPResult {
    pub fn models(&self) -> &[ContinuationModel] {
        &self.policy.models
    }

    /// Stages whose regression needed the ridge fallback.
    pub fn ridge_stages(&self) -> Vec<usize> {
        self.policy
            .models
            .iter()
            .filter(|m| m.ridge)
            .map(|m| m.stage)
            .collect()
    }
}

/// Backward induction with regression-estimated continuation values.
pub fn backward_induction(batch: &PathBatch, basis: &BasisSpec, itm_only: bool) -> Result<DPResult> {
    basis.validate()?;
    let e = batch.stages();
    let n = batch.len();
    if e == 0 {
        return Err(Error::InvalidParameter("at least one stage is required".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "backward induction needs at least 2 paths, got {n}"
        )));
    }
    if basis.window > batch.window() {
        return Err(Error::InvalidParameter(format!(
            "basis window {} exceeds the stored window {}",
            basis.window,
            batch.window()
        )));
    }
    let mut tau = vec![e; n];
    let mut cash: Vec<f64> = (0..n).map(|i| batch.reward(i, e)).collect();
    let mut flags = StopFlags {
        stages: e,
        bits: vec![false; n * (e + 1)],
    };
    for i in 0..n {
        flags.set(i, e, true);
    }
    let mut models: Vec<Option<ContinuationModel>> = vec![None; e];
    let mut base = Vec::new();
    let mut z = Vec::new();
    let mut row = Vec::new();
    for j in (1..e).rev() {
        let rows: Vec<usize> = if itm_only {
            (0..n).filter(|&i| batch.reward(i, j) > 0.0).collect()
        } else {
            (0..n).collect()
        };
        let model = if rows.len() >= 2 {
            fit_rows(
                j,
                rows.len(),
                basis,
                |r, out| batch.base(rows[r], j, basis.window, out),
                |r| cash[rows[r]],
            )
            .map_err(|err| err.in_stage(format!("regression at stage {j}")))?
        } else {
            let mean = cash.iter().sum::<f64>() / n as f64;
            ContinuationModel::constant(j, mean, *basis)
        };
        for &i in &rows {
            let zj = batch.reward(i, j);
            batch.base(i, j, basis.window, &mut base);
            let stop = zj >= model.predict_with(&base, &mut z, &mut row);
            flags.set(i, j, stop);
            if stop {
                tau[i] = j;
                cash[i] = zj;
            }
        }
        models[j] = Some(model);
    }
    let mut acc = MeanEstimate::default();
    for &c in &cash {
        acc.push(c);
    }
    let model0 = ContinuationModel::constant(0, acc.mean(), *basis);
    let u0 = model0.coefficients[0];
    let z0 = batch.reward(0, 0);
    let stop0 = z0 >= u0 && !(itm_only && z0 <= 0.0);
    if stop0 {
        for i in 0..n {
            tau[i] = 0;
            flags.set(i, 0, true);
        }
    }
    models[0] = Some(model0);
    Ok(DPResult {
        value: z0.max(u0),
        value_se: acc.se(),
        policy: StoppingPolicy {
            models: models.into_iter().map(|m| m.expect("every stage fitted")).collect(),
            stages: e,
            itm_only,
        },
        stop_flags: flags,
        tau_index: tau,
        residuals: None,
    })
}

/// First stage at which the policy stops path `i`.
pub fn stopping_time(batch: &PathBatch, i: usize, policy: &StoppingPolicy) -> usize {
    policy.stopping_time(batch, i)
}

/// Out-of-sample mean reward of the policy on independent paths, with its
/// standard error.
pub fn lower_bound_estimate(fresh: &PathBatch, policy: &StoppingPolicy) -> (f64, f64) {
    let mut acc = MeanEstimate::default();
    accumulate_lower_bound(fresh, policy, &mut acc);
    (acc.mean(), acc.se())
}

/// Adds the realised rewards of `batch` under `policy` to `acc`.
pub fn accumulate_lower_bound(batch: &PathBatch, policy: &StoppingPolicy, acc: &mut MeanEstimate) {
    for i in 0..batch.len() {
        let tau = policy.stopping_time(batch, i);
        acc.push(batch.reward(i, tau));
    }
}
