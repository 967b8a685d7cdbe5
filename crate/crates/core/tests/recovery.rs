use hsicts::models::{fit_ccc_garch, fit_var, garch, QmleOptions};
use hsicts::rng::{self, Purpose};
use hsicts::simlab::{egp_innovations, gen_model_5_1, EgpSpec, MODEL_5_1_A1, MODEL_5_1_A2, MODEL_5_2_SERIES1};
use hsicts::MultiSeries;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn var_design_matrices_are_recovered() {
    let mut r = rng::stream(41, Purpose::Generate, 0, 0);
    let (e1, e2) = egp_innovations(&EgpSpec::new(1).unwrap(), 2500, &mut r).unwrap();
    let (y1, y2) = gen_model_5_1(&e1, &e2, 500).unwrap();
    for (y, truth) in [(&y1, MODEL_5_1_A1), (&y2, MODEL_5_1_A2)] {
        let fit = fit_var(y, 1, false).unwrap();
        for (a, b) in fit.theta.iter().zip(truth) {
            assert!((a - b).abs() <= 0.1, "{a} vs {b}");
        }
    }
}

fn garch_sample(seed: u64, n: usize) -> MultiSeries {
    let mut r = rng::stream(seed, Purpose::Generate, 1, 0);
    let z: Vec<f64> = (0..2 * (n + 500)).map(|_| r.sample(StandardNormal)).collect();
    let z = MultiSeries::new(n + 500, 2, z).unwrap();
    garch::simulate(&MODEL_5_2_SERIES1, &z, MODEL_5_2_SERIES1.unconditional_variances(), 500).unwrap()
}

#[test]
fn ccc_garch_estimates_center_on_truth() {
    let truth = MODEL_5_2_SERIES1.to_vec();
    let mut errors = vec![Vec::new(); 7];
    for seed in 0..20u64 {
        let fit = fit_ccc_garch(&garch_sample(seed, 2000), &QmleOptions { seed, ..QmleOptions::default() }).unwrap();
        for (i, (a, b)) in fit.theta.iter().zip(&truth).enumerate() {
            errors[i].push((a - b).abs());
        }
    }
    for (i, e) in errors.iter_mut().enumerate() {
        e.sort_by(f64::total_cmp);
        assert!(e[10] <= 0.1, "parameter {i}: median error {}", e[10]);
        // intercepts, ARCH terms and correlation are well identified; GARCH terms are not at this n
        if ![2, 5].contains(&i) {
            assert!(e[17] <= 0.15, "parameter {i}: 90th percentile error {}", e[17]);
        }
    }
}

#[test]
fn ccc_garch_is_consistent() {
    let truth = MODEL_5_2_SERIES1.to_vec();
    for seed in 0..3u64 {
        let fit = fit_ccc_garch(&garch_sample(100 + seed, 20_000), &QmleOptions { seed, ..QmleOptions::default() }).unwrap();
        for (a, b) in fit.theta.iter().zip(&truth) {
            assert!((a - b).abs() <= 0.15, "{:?}", fit.theta);
        }
    }
}
