use proptest::prelude::*;
use skelstop::oracles::exit_mgf;
use skelstop::rng::{path_stream, StreamKind};
use skelstop::skeleton::{
    build_skeleton, num_steps, sample_increment, sample_unit_exit_time, Skeleton, SkeletonConfig,
};

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

#[test]
fn scaled_increments_share_the_unit_law() {
    let n = 100_000;
    let eps = 0.3;
    let mut ra = path_stream(1, StreamKind::Scratch, 0);
    let mut rb = path_stream(1, StreamKind::Scratch, 1);
    let unit: Vec<f64> = (0..n).map(|_| sample_unit_exit_time(&mut ra).unwrap()).collect();
    let scaled: Vec<f64> = (0..n)
        .map(|_| sample_increment(&mut rb, eps).unwrap().0 / (eps * eps))
        .collect();
    let d = ks_statistic(unit, scaled);
    // two-sample critical value at level 0.001
    let crit = 1.949 * (2.0 / n as f64).sqrt();
    assert!(d < crit, "KS distance {d} exceeds {crit}");
}

#[test]
fn laplace_transform_matches_closed_form() {
    let mut rng = path_stream(2, StreamKind::Scratch, 0);
    let draws: Vec<f64> = (0..200_000).map(|_| sample_unit_exit_time(&mut rng).unwrap()).collect();
    for lambda in [-0.5, -1.0, -2.0] {
        let vals: Vec<f64> = draws.iter().map(|t| (lambda * t).exp()).collect();
        let (m, se) = mean_se(&vals);
        let exact = exit_mgf(lambda).unwrap();
        assert!((m - exact).abs() < 3.0 * se, "lambda {lambda}: {m} vs {exact} (se {se})");
    }
    let (m, se) = mean_se(&draws);
    assert!((m - 1.0).abs() < 3.0 * se);
}

#[test]
fn half_step_increments() {
    let mut rng = path_stream(3, StreamKind::Scratch, 0);
    let n = 1_000_000;
    let mut sum = 0.0;
    let mut ups = 0usize;
    for _ in 0..n {
        let (d, s) = sample_increment(&mut rng, 0.5).unwrap();
        sum += d;
        ups += (s > 0) as usize;
    }
    assert!((sum / n as f64 - 0.25).abs() < 0.01);
    assert!((ups as f64 / n as f64 - 0.5).abs() < 0.003);
}

#[test]
fn terminal_time_concentrates_as_eps_shrinks() {
    let mut prev: Option<(f64, f64)> = None;
    for eps in [0.25, 0.125, 0.0625] {
        let cfg = SkeletonConfig::new(eps, 1, 1.0, 4).unwrap();
        let steps = cfg.num_steps();
        let sq: Vec<f64> = (0..10_000)
            .map(|i| {
                let s = cfg.sample(steps, i).unwrap();
                (s.time_at(steps) - 1.0).powi(2)
            })
            .collect();
        let (m, se) = mean_se(&sq);
        if let Some((pm, pse)) = prev {
            assert!(m < pm + 2.0 * (se * se + pse * pse).sqrt(), "eps {eps}: {m} after {pm}");
        }
        prev = Some((m, se));
    }
}

#[test]
fn per_coordinate_clocks_in_three_dimensions() {
    let eps = 0.2;
    let cfg = SkeletonConfig::new(eps, 3, 1.0, 6).unwrap();
    let mut gaps = vec![Vec::new(); 3];
    for i in 0..400 {
        let s = cfg.sample(300, i).unwrap();
        let mut last = [0.0f64; 3];
        for n in 0..s.len() {
            let c = s.moves()[n].coord();
            let t = s.times()[n];
            gaps[c].push(t - last[c]);
            last[c] = t;
        }
    }
    for g in &gaps {
        let (m, se) = mean_se(g);
        assert!((m - eps * eps).abs() < 4.0 * se, "per-coordinate mean {m}");
    }
    assert_eq!(num_steps(eps, 1.0, 3), 3 * num_steps(eps, 1.0, 1));
}

#[test]
fn independent_of_stream_order() {
    let cfg = SkeletonConfig::new(0.1, 2, 1.0, 8).unwrap();
    let forward: Vec<Skeleton> = (0..20).map(|i| cfg.sample(50, i).unwrap()).collect();
    let backward: Vec<Skeleton> = (0..20).rev().map(|i| cfg.sample(50, i).unwrap()).collect();
    for (a, b) in forward.iter().zip(backward.iter().rev()) {
        assert_eq!(a, b);
    }
    let mut rng = cfg.stream(StreamKind::Training, 7);
    assert_eq!(build_skeleton(&cfg, 50, &mut rng).unwrap(), forward[7]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn binary_round_trip(seed in 0u64..1000, dim in 1usize..4, steps in 1usize..80, eps in 0.01f64..1.0) {
        let cfg = SkeletonConfig::new(eps, dim, 1.0, seed).unwrap();
        let s = cfg.sample(steps, 0).unwrap();
        let mut buf = Vec::new();
        s.write_binary(&mut buf).unwrap();
        let back = Skeleton::read_binary(buf.as_slice(), eps, dim).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.id(), s.id());
    }

    #[test]
    fn walks_stay_on_the_lattice(seed in 0u64..1000, dim in 1usize..4, steps in 1usize..60) {
        let eps = 0.125;
        let cfg = SkeletonConfig::new(eps, dim, 1.0, seed).unwrap();
        let s = cfg.sample(steps, 1).unwrap();
        let mut prev_t = 0.0;
        for n in 0..s.len() {
            prop_assert!(s.times()[n] > prev_t);
            prev_t = s.times()[n];
        }
        for c in 0..dim {
            for n in 0..=s.len() {
                let w = s.walk_value(c, n);
                prop_assert!((w / eps - (w / eps).round()).abs() < 1e-12);
                prop_assert!(s.walk_level(c, n).unsigned_abs() as usize <= n);
            }
        }
    }

    #[test]
    fn history_reproduces_times(seed in 0u64..500, steps in 1usize..40, stage in 0usize..40) {
        let cfg = SkeletonConfig::new(0.3, 1, 1.0, seed).unwrap();
        let s = cfg.sample(steps, 0).unwrap();
        let stage = stage.min(steps);
        let h = s.history(stage);
        prop_assert_eq!(h.stage(), stage);
        for (j, t) in h.elapsed().iter().enumerate() {
            prop_assert!((t - s.times()[j]).abs() <= 1e-12 * s.times()[j].max(1.0));
        }
    }
}
