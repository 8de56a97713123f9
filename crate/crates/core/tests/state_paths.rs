use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use skelstop::fbm_kernel::{FbmParams, KernelTable};
use skelstop::rng::{path_stream, StreamKind};
use skelstop::skeleton::SkeletonConfig;
use skelstop::state_models::{
    reward_path, simulate_path, CoefficientSpec, Functional, RewardFunctional, StateModel,
};

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn euler_on_skeleton_matches_fine_grid_reference() {
    let spec = CoefficientSpec::new(Functional::Linear { a: 0.0, b: -1.0 }, Functional::Constant(1.0));
    let model = StateModel::Euler(spec);
    let cfg = SkeletonConfig::new(0.0625, 1, 1.0, 31).unwrap();
    let steps = 2 * cfg.num_steps();
    let skel: Vec<f64> = (0..100_000)
        .map(|i| {
            let s = cfg.sample(steps, i).unwrap();
            let m = s.grid_query(1.0).count;
            simulate_path(&model, &s, 1.0, m).unwrap().values[m]
        })
        .collect();

    let dt: f64 = 1e-4;
    let fine: Vec<f64> = (0..20_000)
        .map(|i| {
            let mut rng = path_stream(31, StreamKind::Oracle, i);
            let mut x = 1.0;
            for _ in 0..10_000 {
                let z: f64 = rng.sample(StandardNormal);
                x += -x * dt + dt.sqrt() * z;
            }
            x
        })
        .collect();
    let (a, sa) = mean_se(&skel);
    let (b, sb) = mean_se(&fine);
    assert!((a - b).abs() < 3.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
}

#[test]
fn drifted_fbm_state_has_fbm_spread() {
    let h = 0.7;
    let table = Arc::new(KernelTable::new(FbmParams::calibrated(h).unwrap()).unwrap());
    let model = StateModel::Fbm {
        spec: CoefficientSpec::new(Functional::Constant(0.3), Functional::Zero),
        kernel: table,
    };
    let cfg = SkeletonConfig::new(0.0625, 1, 1.0, 32).unwrap();
    let steps = cfg.num_steps();
    let mut finals = Vec::new();
    let mut clock = Vec::new();
    for i in 0..10_000 {
        let s = cfg.sample(steps, i).unwrap();
        let m = s.grid_query(0.5).count;
        let x = simulate_path(&model, &s, 0.0, m).unwrap();
        finals.push(x.values[m]);
        clock.push(s.time_at(m));
    }
    let (m, _) = mean_se(&finals);
    let (t, _) = mean_se(&clock);
    let var = finals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (finals.len() - 1) as f64;
    let target = 0.5f64.powf(2.0 * h);
    assert!((var / target - 1.0).abs() < 0.05, "variance {var} vs {target}");
    assert!((m - 0.3 * t).abs() < 0.03, "mean {m} vs drift {}", 0.3 * t);
}

#[test]
fn rewards_freeze_after_horizon() {
    let model = StateModel::Euler(CoefficientSpec::gbm_log(0.06, 0.2));
    let reward = RewardFunctional::new(Functional::Put { strike: 40.0, rate: 0.06 });
    let cfg = SkeletonConfig::new(0.25, 1, 1.0, 33).unwrap();
    for i in 0..50 {
        let s = cfg.sample(40, i).unwrap();
        let x = simulate_path(&model, &s, 36f64.ln(), 40).unwrap();
        let z = reward_path(&reward, &x, &s, 1.0, 40).unwrap();
        assert_eq!(z.values[0], 4.0);
        let n0 = z.frozen_from.expect("40 steps of size 1/16 overshoot the horizon");
        assert!(s.time_at(n0) > 1.0 && s.time_at(n0 - 1) <= 1.0);
        assert!(z.values[n0..].iter().all(|&v| v == z.values[n0 - 1]));
    }
}
