//! Skeletons read off a fine Brownian path, for coupling the skeleton fBm
//! driver with an exact fBm built from the same path.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fbm_kernel::{driver_from_skeleton, FbmParams, KernelEval, KernelTable};
use crate::rng::{path_stream, StreamKind};
use crate::skeleton::{Move, Skeleton};
use crate::stop_dp::MeanEstimate;

/// Brownian motion on the uniform grid `i * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinePath {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl FinePath {
    pub fn sample<R: Rng + ?Sized>(dt: f64, steps: usize, rng: &mut R) -> Self {
        let sd = dt.sqrt();
        let mut values = Vec::with_capacity(steps + 1);
        let mut b = 0.0;
        values.push(b);
        for _ in 0..steps {
            b += sd * rng.sample::<f64, _>(StandardNormal);
            values.push(b);
        }
        Self { dt, values }
    }

    pub fn from_values(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || values.first() != Some(&0.0) {
            return Err(Error::InvalidParameter(
                "fine path needs dt > 0 and a start at 0".into(),
            ));
        }
        Ok(Self { dt, values })
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

/// `-zeta(1/2) / sqrt(2 pi)`: mean overshoot of a Gaussian random walk over
/// a barrier, in units of its step standard deviation.
pub const OVERSHOOT: f64 = 0.582_597_157_939_010_7;

/// Barrier distance at which a path monitored every `dt` is taken to have
/// moved `eps`; shifted in by the expected overshoot.
pub fn crossing_threshold(eps: f64, dt: f64) -> f64 {
    (eps - OVERSHOOT * dt.sqrt()).max(0.5 * eps)
}

/// First-crossing detection against the lattice `eps Z`, up to `limit`
/// events and up to time `horizon`.
fn crossings(fine: &FinePath, eps: f64, limit: usize, horizon: f64) -> (Vec<f64>, Vec<Move>) {
    let threshold = crossing_threshold(eps, fine.dt);
    let mut times = Vec::new();
    let mut moves = Vec::new();
    let mut reference = 0.0;
    for (i, &b) in fine.values.iter().enumerate().skip(1) {
        if times.len() == limit || fine.time(i) > horizon {
            break;
        }
        let d = b - reference;
        if d.abs() >= threshold {
            let sign: i8 = if d > 0.0 { 1 } else { -1 };
            reference += sign as f64 * eps;
            times.push(fine.time(i));
            moves.push(Move::new(0, sign).expect("unit sign"));
        }
    }
    (times, moves)
}

fn to_skeleton(eps: f64, times: Vec<f64>, moves: Vec<Move>) -> Result<Skeleton> {
    let mut prev = 0.0;
    let deltas = times
        .iter()
        .map(|&t| {
            let d = t - prev;
            prev = t;
            d
        })
        .collect();
    Skeleton::from_events(eps, 1, deltas, moves)
}

/// The first `steps` events of the skeleton of `fine` at level `eps`.
pub fn coupled_skeleton(fine: &FinePath, eps: f64, steps: usize) -> Result<Skeleton> {
    let (times, moves) = crossings(fine, eps, steps, f64::INFINITY);
    if times.len() < steps {
        return Err(Error::CouplingExhausted {
            found: times.len(),
            requested: steps,
        });
    }
    to_skeleton(eps, times, moves)
}

/// All events of the skeleton of `fine` up to time `horizon`.
pub fn coupled_skeleton_until(fine: &FinePath, eps: f64, horizon: f64) -> Result<Skeleton> {
    let (times, moves) = crossings(fine, eps, usize::MAX, horizon);
    to_skeleton(eps, times, moves)
}

/// Options of the coupled driver error study.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingStudy {
    pub hurst: f64,
    pub eps: Vec<f64>,
    pub paths: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Number of equally spaced times at which the supremum is taken.
    pub eval_points: usize,
    pub seed: u64,
    /// Paths processed together, sharing kernel rows.
    pub batch: usize,
}

impl CouplingStudy {
    pub fn new(hurst: f64, eps: Vec<f64>, paths: usize, seed: u64) -> Self {
        Self {
            hurst,
            eps,
            paths,
            dt: 1e-5,
            horizon: 1.0,
            eval_points: 500,
            seed,
            batch: 100,
        }
    }
}

/// Mean and standard error of `sup_t |B^k_H(t) - B_H(t)|` per level.
///
/// `B_H` applies the same piecewise-constant integration against `rho_H` to
/// the fine path itself, so both processes share the Brownian path and the
/// sign convention of the driver.
pub fn coupled_driver_error(study: &CouplingStudy) -> Result<Vec<(f64, f64, f64)>> {
    let params = FbmParams::calibrated(study.hurst)?;
    let table = KernelTable::new(params)?;
    let steps = (study.horizon / study.dt).round() as usize;
    let stride = steps / study.eval_points;
    if stride == 0 {
        return Err(Error::InvalidParameter("more evaluation points than fine steps".into()));
    }
    let eval_idx: Vec<usize> = (1..=study.eval_points).map(|e| e * stride).collect();
    let mut acc = vec![MeanEstimate::default(); study.eps.len()];
    let mut start = 0;
    while start < study.paths {
        let count = study.batch.min(study.paths - start);
        let fine: Vec<FinePath> = (0..count)
            .map(|p| {
                let mut rng = path_stream(study.seed, StreamKind::Oracle, (start + p) as u64);
                FinePath::sample(study.dt, steps, &mut rng)
            })
            .collect();
        // exact values at the evaluation times: -sum_{i < J} dB_i K(s_J, s_i)
        let mut exact = vec![vec![0.0; eval_idx.len()]; count];
        let mut row = Vec::with_capacity(steps);
        for (e, &j) in eval_idx.iter().enumerate() {
            let t = fine[0].time(j);
            row.clear();
            row.extend((1..j).map(|i| table.k(t, fine[0].time(i))));
            for (p, path) in fine.iter().enumerate() {
                let v = &path.values;
                let s: f64 = row
                    .iter()
                    .enumerate()
                    .map(|(k, kv)| kv * (v[k + 1] - v[k]))
                    .sum();
                exact[p][e] = -s;
            }
        }
        for (l, &eps) in study.eps.iter().enumerate() {
            for (p, path) in fine.iter().enumerate() {
                let sk = coupled_skeleton_until(path, eps, study.horizon)?;
                let drv = driver_from_skeleton(&table, &sk, sk.len())?;
                let sup = eval_idx
                    .iter()
                    .enumerate()
                    .map(|(e, &j)| (drv.value_at(&sk, path.time(j)) - exact[p][e]).abs())
                    .fold(0.0, f64::max);
                acc[l].push(sup);
            }
        }
        start += count;
    }
    Ok(study
        .eps
        .iter()
        .zip(&acc)
        .map(|(&eps, a)| (eps, a.mean(), a.se()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_crosses_at_known_index() {
        let values: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
        let fine = FinePath::from_values(1e-8, values).unwrap();
        let s = coupled_skeleton(&fine, 0.25, 3).unwrap();
        let idx: Vec<usize> = s.times().iter().map(|t| (t / 1e-8).round() as usize).collect();
        assert_eq!(idx, vec![25, 50, 75]);
        assert!(s.moves().iter().all(|m| m.sign() == 1));
        match coupled_skeleton(&fine, 0.25, 5) {
            Err(Error::CouplingExhausted { found: 4, requested: 5 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn signs_follow_displacements() {
        let mut rng = path_stream(3, StreamKind::Oracle, 0);
        let fine = FinePath::sample(1e-4, 200_000, &mut rng);
        let s = coupled_skeleton(&fine, 0.1, 50).unwrap();
        let mut level = 0.0;
        for (t, m) in s.times().iter().zip(s.moves()) {
            let i = (t / fine.dt).round() as usize;
            let d = fine.values[i] - level;
            assert_eq!(d > 0.0, m.sign() == 1);
            assert!(d.abs() >= crossing_threshold(0.1, fine.dt));
            level += 0.1 * m.sign() as f64;
        }
    }

    #[test]
    fn until_stops_at_horizon() {
        let mut rng = path_stream(3, StreamKind::Oracle, 1);
        let fine = FinePath::sample(1e-4, 20_000, &mut rng);
        let s = coupled_skeleton_until(&fine, 0.2, 1.0).unwrap();
        assert!(s.times().iter().all(|&t| t <= 1.0));
        let all = coupled_skeleton_until(&fine, 0.2, 2.0).unwrap();
        assert!(all.len() >= s.len());
        assert_eq!(&all.times()[..s.len()], s.times());
    }
}
