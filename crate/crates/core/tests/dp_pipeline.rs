use proptest::prelude::*;
use rand::Rng;
use skelstop::oracles::{crr_american, crr_exhaustive, put_payoff, CrrSpec};
use skelstop::rng::{path_stream, StreamKind};
use skelstop::skeleton::{Skeleton, SkeletonConfig};
use skelstop::state_models::{
    euler_path, reward_path, simulate_path, CoefficientSpec, Functional, RewardFunctional,
    StateModel,
};
use skelstop::stop_dp::{
    backward_induction, exact_tree_dp, lower_bound_estimate, BasisFamily, BasisSpec, PathBatch,
};

const RATE: f64 = 0.06;
const SIGMA: f64 = 0.2;
const STRIKE: f64 = 40.0;
const S0: f64 = 36.0;

fn put() -> RewardFunctional {
    RewardFunctional::new(Functional::Put { strike: STRIKE, rate: RATE })
}

fn poly(degree: usize) -> BasisSpec {
    BasisSpec::new(BasisFamily::Polynomial, degree, 0, 1e6).unwrap()
}

// the deterministic-clock log-price walk as a binomial tree
fn matching_crr(eps: f64, steps: usize) -> CrrSpec {
    let mu = RATE - 0.5 * SIGMA * SIGMA;
    let h = eps * eps;
    CrrSpec::new(
        steps,
        (mu * h + SIGMA * eps).exp(),
        (mu * h - SIGMA * eps).exp(),
        0.5,
        (-RATE * h).exp(),
        put_payoff(STRIKE),
    )
    .unwrap()
}

fn clock_batch(
    eps: f64,
    stages: usize,
    paths: usize,
    seed: u64,
    kind: StreamKind,
    spec: &CoefficientSpec,
    reward: &RewardFunctional,
) -> PathBatch {
    let mut batch = PathBatch::with_capacity(stages, 0, paths);
    for i in 0..paths {
        let mut rng = path_stream(seed, kind, i as u64);
        let signs: Vec<i8> = (0..stages).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let s = Skeleton::deterministic_clock(eps, &signs).unwrap();
        let x = euler_path(spec, &s, S0.ln(), stages).unwrap();
        let z = reward_path(reward, &x, &s, 10.0, stages).unwrap();
        batch.push_skeleton(&s, &x, &z).unwrap();
    }
    batch
}

#[test]
fn two_stage_regression_on_all_leaves_is_exact() {
    let eps = 0.4;
    let spec = CoefficientSpec::gbm_log(RATE, SIGMA);
    let mut batch = PathBatch::new(2, 0);
    for leaf in 0..4usize {
        let signs = [if leaf & 1 == 1 { 1 } else { -1 }, if leaf & 2 == 2 { 1 } else { -1 }];
        let s = Skeleton::deterministic_clock(eps, &signs).unwrap();
        let x = euler_path(&spec, &s, S0.ln(), 2).unwrap();
        let z = reward_path(&put(), &x, &s, 10.0, 2).unwrap();
        batch.push_skeleton(&s, &x, &z).unwrap();
    }
    let dp = backward_induction(&batch, &poly(1), false).unwrap();
    let exhaustive = crr_exhaustive(&matching_crr(eps, 2), S0).unwrap();
    assert!((dp.value - exhaustive).abs() < 1e-8, "{} vs {exhaustive}", dp.value);
}

#[test]
fn exact_tree_agrees_with_binomial_tree() {
    let spec = CoefficientSpec::gbm_log(RATE, SIGMA);
    for (eps, stages) in [(0.3, 10), (0.25, 12), (0.5, 3)] {
        let tree = exact_tree_dp(eps, stages, &spec, &put(), 10.0, S0.ln()).unwrap();
        let crr = crr_american(&matching_crr(eps, stages), S0);
        assert!((tree.value() - crr).abs() < 1e-12, "{} vs {crr}", tree.value());
        if stages <= 4 {
            let ex = crr_exhaustive(&matching_crr(eps, stages), S0).unwrap();
            assert!((tree.value() - ex).abs() < 1e-12);
        }
    }
}

#[test]
fn out_of_sample_bound_stays_below_exact_value() {
    let (eps, stages) = (0.25, 12);
    let spec = CoefficientSpec::gbm_log(RATE, SIGMA);
    let exact = exact_tree_dp(eps, stages, &spec, &put(), 10.0, S0.ln()).unwrap().value();
    let train = clock_batch(eps, stages, 20_000, 41, StreamKind::Training, &spec, &put());
    let fresh = clock_batch(eps, stages, 20_000, 41, StreamKind::Fresh, &spec, &put());
    for itm in [false, true] {
        let dp = backward_induction(&train, &poly(2), itm).unwrap();
        let (lb, se) = lower_bound_estimate(&fresh, &dp.policy);
        assert!(lb <= exact + 3.0 * se, "itm {itm}: {lb} vs {exact}");
        assert!(lb > exact - 0.1, "itm {itm}: {lb} too far below {exact}");
    }
}

#[test]
fn richer_basis_does_not_lose_value() {
    let (eps, stages) = (0.25, 12);
    let spec = CoefficientSpec::gbm_log(RATE, SIGMA);
    let train = clock_batch(eps, stages, 20_000, 42, StreamKind::Training, &spec, &put());
    let poor = backward_induction(&train, &poly(1), true).unwrap();
    let rich = backward_induction(&train, &poly(3), true).unwrap();
    assert!(rich.value >= poor.value - 3.0 * poor.value_se, "{} vs {}", rich.value, poor.value);
}

#[test]
fn constant_reward_bound_is_exact() {
    let spec = CoefficientSpec::gbm_log(RATE, SIGMA);
    let c = RewardFunctional::new(Functional::Constant(2.5));
    let train = clock_batch(0.3, 8, 500, 43, StreamKind::Training, &spec, &c);
    let fresh = clock_batch(0.3, 8, 500, 43, StreamKind::Fresh, &spec, &c);
    let dp = backward_induction(&train, &poly(2), false).unwrap();
    assert_eq!(dp.value, 2.5);
    assert_eq!(lower_bound_estimate(&fresh, &dp.policy), (2.5, 0.0));
}

#[test]
fn gbm_put_on_random_skeleton() {
    let eps = 0.25;
    let cfg = SkeletonConfig::new(eps, 1, 1.0, 44).unwrap();
    let stages = cfg.num_steps();
    let model = StateModel::Euler(CoefficientSpec::gbm_log(RATE, SIGMA));
    let build = |kind: StreamKind| {
        let mut batch = PathBatch::with_capacity(stages, 0, 20_000);
        for i in 0..20_000 {
            let mut rng = cfg.stream(kind, i);
            let s = skelstop::skeleton::build_skeleton(&cfg, stages, &mut rng).unwrap();
            let x = simulate_path(&model, &s, S0.ln(), stages).unwrap();
            let z = reward_path(&put(), &x, &s, 1.0, stages).unwrap();
            batch.push_skeleton(&s, &x, &z).unwrap();
        }
        batch
    };
    let reference = crr_american(
        &CrrSpec::risk_neutral(RATE, SIGMA, 1.0, 5000, put_payoff(STRIKE)).unwrap(),
        S0,
    );
    let dp = backward_induction(&build(StreamKind::Training), &poly(3), true).unwrap();
    let (lb, se) = lower_bound_estimate(&build(StreamKind::Fresh), &dp.policy);
    assert!((dp.value / reference - 1.0).abs() < 0.03, "{} vs {reference}", dp.value);
    assert!(lb <= reference + 3.0 * se, "{lb} vs {reference}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tree_residuals_vanish(stages in 2usize..=12, eps in 0.05f64..0.5, which in 0usize..3) {
        let spec = CoefficientSpec::gbm_log(RATE, SIGMA);
        let payoff = match which {
            0 => Functional::Put { strike: STRIKE, rate: RATE },
            1 => Functional::LookbackPut { rate: RATE },
            _ => Functional::Constant(1.7),
        };
        let r = exact_tree_dp(eps, stages, &spec, &RewardFunctional::new(payoff), 1.0, S0.ln()).unwrap();
        prop_assert!(r.max_abs_residual() <= 1e-12);
        prop_assert!(r.terminal_matches());
        prop_assert_eq!(r.policy().value(), r.value());
    }
}
