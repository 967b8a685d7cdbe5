use proptest::prelude::*;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::hsic::Direction;
use crate::models::{fit_ccc_garch, fit_var, simulate, InitState, QmleOptions};

fn normals(seed: u64, n: usize, d: usize) -> MultiSeries {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    MultiSeries::new(n, d, (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap()
}

fn var1_data(seed: u64, n: usize) -> MultiSeries {
    let theta = [0.4, 0.1, -0.3, 0.5];
    let spec = ModelSpec::var(1, false).unwrap();
    let init = InitState::Var { presample: MultiSeries::zeros(1, 2) };
    simulate(&spec, &theta, &normals(seed, n + 200, 2), &init, SimulateOptions { burn_in: 200, allow_explosive: false }).unwrap()
}

fn cfg(b: usize, seed: u64) -> BootstrapConfig {
    BootstrapConfig { replicates: b, master_seed: seed, ..BootstrapConfig::default() }
}

#[test]
fn p_value_formula() {
    assert_eq!(bootstrap_p_value(&[1.0], 0.5), 1.0);
    assert_eq!(bootstrap_p_value(&[1.0], 2.0), 0.5);
    assert_eq!(bootstrap_p_value(&[0.3, 0.7, 1.2], 0.0), 1.0);
    let reps: Vec<f64> = (1..=199).map(f64::from).collect();
    assert_eq!(bootstrap_p_value(&reps, 190.5), 0.05);
}

#[test]
fn critical_value_order_statistic() {
    let reps: Vec<f64> = (1..=199).map(f64::from).collect();
    assert_eq!(critical_value(&reps, 0.05), Some(190.0));
    assert_eq!(critical_value(&reps, 0.01), Some(198.0));
    assert_eq!(critical_value(&reps, 0.10), Some(180.0));
    assert_eq!(critical_value(&[1.0, 2.0], 0.05), None);
}

proptest! {
    #[test]
    fn p_value_and_critical_value_agree(
        reps in prop::collection::vec(0.0f64..10.0, 1..300),
        obs in 0.0f64..10.0,
        alpha in prop::sample::select(vec![0.01, 0.05, 0.10, 0.2]),
    ) {
        let mut sorted = reps.clone();
        sorted.sort_by(f64::total_cmp);
        let p = bootstrap_p_value(&reps, obs);
        let exceeds = critical_value(&sorted, alpha).is_some_and(|c| obs > c);
        prop_assert_eq!(p <= alpha, exceeds);
    }
}

#[test]
fn failure_budget() {
    let fail = || Err(Error::Degenerate("x".into()));
    let mut runs: Vec<Result<Vec<f64>>> = (0..100).map(|i| Ok(vec![i as f64])).collect();
    runs[3] = fail();
    runs[40] = fail();
    let (vals, failed) = collect_replicates(runs, 1).unwrap();
    assert_eq!(failed, vec![3, 40]);
    assert_eq!(vals[0].len(), 98);
    let mut runs: Vec<Result<Vec<f64>>> = (0..100).map(|i| Ok(vec![i as f64])).collect();
    for i in [1, 2, 3] {
        runs[i] = fail();
    }
    match collect_replicates(runs, 1) {
        Err(Error::FailureBudget { failed: 3, total: 100, first, .. }) => assert!(first.contains("replicate 1")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn one_step_with_zero_influence_is_identity() {
    let spec = ModelSpec::var(1, false).unwrap();
    let theta = vec![0.4, 0.1, -0.3, 0.5];
    assert_eq!(one_step_update(&spec, &theta, &[0.0; 4]).unwrap(), theta);
}

#[test]
fn refit_on_bootstrap_path_solves_normal_equations() {
    let data = var1_data(1, 300);
    let fit = fit_var(&data, 1, true).unwrap();
    let pool = standardize_residuals(&fit, true).unwrap();
    let mut rng = rng::stream(5, Purpose::Bootstrap, 0, 0);
    let path = bootstrap_path(&fit, &pool, 100, &mut rng).unwrap();
    assert_eq!(path.nrows(), 300);
    let theta = bootstrap_estimate(&fit, &path, EstimatorMode::FullRefit, 0).unwrap();
    let res = residuals_with(&fit.spec, &theta, &path).unwrap();
    for i in 0..2 {
        let mut sums = [0.0; 3];
        for t in 1..300 {
            let e = res.get(t, i);
            sums[0] += e;
            sums[1] += e * path.get(t - 1, 0);
            sums[2] += e * path.get(t - 1, 1);
        }
        assert!(sums.iter().all(|s| s.abs() < 1e-9), "{sums:?}");
    }
}

#[test]
fn one_step_tracks_full_refit_for_var() {
    let mut close = 0;
    for seed in 0..20 {
        let fit = fit_var(&var1_data(100 + seed, 1000), 1, false).unwrap();
        let pool = standardize_residuals(&fit, true).unwrap();
        let mut rng = rng::stream(seed, Purpose::Bootstrap, 0, 0);
        let path = bootstrap_path(&fit, &pool, 500, &mut rng).unwrap();
        let a = bootstrap_estimate(&fit, &path, EstimatorMode::OneStep, 0).unwrap();
        let b = bootstrap_estimate(&fit, &path, EstimatorMode::FullRefit, 0).unwrap();
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        close += usize::from(diff <= 0.05);
    }
    assert!(close >= 18, "{close}/20 within tolerance");
}

#[test]
fn garch_pool_is_whitened() {
    let p = CccParams { omega: [0.2, 0.2], alpha: [0.1, 0.1], beta: [0.5, 0.5], rho: 0.5 };
    let y = crate::models::garch::simulate(&p, &normals(3, 1500, 2), p.unconditional_variances(), 500).unwrap();
    let fit = fit_ccc_garch(&y, &QmleOptions::default()).unwrap();
    let pool = standardize_residuals(&fit, true).unwrap();
    let cov = pool.covariance();
    for (i, c) in cov.iter().enumerate() {
        let target = if i == 0 || i == 3 { 1.0 } else { 0.0 };
        assert!((c - target).abs() < 1e-10, "{cov:?}");
    }
    assert!(pool.column_means().iter().all(|m| m.abs() < 1e-12));
    let centered = standardize_residuals(&fit, false).unwrap();
    assert!(centered.column_means().iter().all(|m| m.abs() < 1e-12));
    assert_ne!(pool, centered);
}

#[test]
fn single_replicate_p_value() {
    let f1 = fit_var(&var1_data(7, 120), 1, false).unwrap();
    let f2 = fit_var(&var1_data(8, 120), 1, false).unwrap();
    let k = KernelSpec::default();
    let r = bootstrap_test(&f1, &f2, LagConfig::single(0, Direction::One), &k, &k, &cfg(1, 3)).unwrap();
    assert!(r.outcome.p_value == 0.5 || r.outcome.p_value == 1.0);
    assert_eq!(r.replicate_stats.len(), 1);
}

#[test]
fn shared_paths_match_single_runs_and_are_reproducible() {
    let f1 = fit_var(&var1_data(11, 150), 1, false).unwrap();
    let f2 = fit_var(&var1_data(12, 150), 2, false).unwrap();
    let k = KernelSpec::default();
    let stats = [LagConfig::single(0, Direction::One), LagConfig::joint(3, Direction::Two)];
    let c = BootstrapConfig { keep_replicates: true, ..cfg(30, 9) };
    let multi = bootstrap_tests(&f1, &f2, &stats, &k, &k, &c).unwrap();
    let single = bootstrap_test(&f1, &f2, stats[1], &k, &k, &c).unwrap();
    assert_eq!(multi[1], single);
    assert_eq!(multi[0].outcome.n, 148);
    assert_eq!(multi[1].outcome.n_effective, 145);
    assert_eq!(multi[0].outcome.replicates.as_ref().unwrap().len(), 30);
    let again = bootstrap_tests(&f1, &f2, &stats, &k, &k, &c).unwrap();
    assert_eq!(multi, again);
    let other = bootstrap_tests(&f1, &f2, &stats, &k, &k, &cfg(30, 10)).unwrap();
    assert_ne!(multi[0].replicate_stats, other[0].replicate_stats);
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_results() {
    let f1 = fit_var(&var1_data(21, 100), 1, false).unwrap();
    let f2 = fit_var(&var1_data(22, 100), 1, false).unwrap();
    let k = KernelSpec::default();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| bootstrap_test(&f1, &f2, LagConfig::joint(2, Direction::One), &k, &k, &cfg(40, 1)).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(8));
}

#[test]
fn rejects_bad_config() {
    let f1 = fit_var(&var1_data(31, 100), 1, false).unwrap();
    let k = KernelSpec::default();
    let s = LagConfig::single(0, Direction::One);
    assert!(bootstrap_test(&f1, &f1, s, &k, &k, &cfg(0, 0)).is_err());
    let bad = BootstrapConfig { alphas: vec![1.5], ..cfg(5, 0) };
    assert!(bootstrap_test(&f1, &f1, s, &k, &k, &bad).is_err());
    assert!(bootstrap_test(&f1, &f1, LagConfig::single(99, Direction::One), &k, &k, &cfg(5, 0)).is_err());
}
