use hsicts::bootstrap::{bootstrap_tests, BootstrapConfig};
use hsicts::crosscorr::{g_test, Variant};
use hsicts::hsic::{Direction, LagConfig, LaggedGrams, PairedResiduals};
use hsicts::kernels::KernelSpec;
use hsicts::models::{fit_ccc_garch, fit_var, QmleOptions};
use hsicts::rng::{self, Purpose};
use hsicts::simlab::{egp_innovations, gen_model_5_1, gen_model_5_2, EgpSpec};

#[test]
fn dependent_var_residuals_are_detected() {
    let mut r = rng::stream(9, Purpose::Generate, 0, 0);
    let (e1, e2) = egp_innovations(&EgpSpec::new(3).unwrap(), 700, &mut r).unwrap();
    let (y1, y2) = gen_model_5_1(&e1, &e2, 500).unwrap();
    let (f1, f2) = (fit_var(&y1, 1, false).unwrap(), fit_var(&y2, 1, false).unwrap());
    let k = KernelSpec::default();
    let stats = [LagConfig::single(0, Direction::One), LagConfig::single(3, Direction::One)];
    let cfg = BootstrapConfig { replicates: 199, master_seed: 1, ..BootstrapConfig::default() };
    let out = bootstrap_tests(&f1, &f2, &stats, &k, &k, &cfg).unwrap();
    assert!(out[0].outcome.p_value <= 0.05, "lag 0 p = {}", out[0].outcome.p_value);
    assert_eq!(out[0].outcome.n, 199);
}

#[test]
fn garch_pipeline_with_one_step_bootstrap() {
    let mut r = rng::stream(4, Purpose::Generate, 0, 0);
    let (e1, e2) = egp_innovations(&EgpSpec::new(2).unwrap(), 800, &mut r).unwrap();
    let (y1, y2) = gen_model_5_2(&e1, &e2, 500).unwrap();
    let f1 = fit_ccc_garch(&y1, &QmleOptions::default()).unwrap();
    let f2 = fit_ccc_garch(&y2, &QmleOptions::default()).unwrap();
    let k = KernelSpec::default();
    let cfg = BootstrapConfig { replicates: 99, master_seed: 2, ..BootstrapConfig::default() };
    let out = bootstrap_tests(&f1, &f2, &[LagConfig::single(0, Direction::One)], &k, &k, &cfg).unwrap();
    assert!(out[0].failed.is_empty());
    assert!(out[0].outcome.p_value <= 0.05);
}

#[test]
fn same_series_twice_is_maximally_dependent() {
    let mut r = rng::stream(5, Purpose::Generate, 0, 0);
    let (e1, _) = egp_innovations(&EgpSpec::new(1).unwrap(), 150, &mut r).unwrap();
    let res = PairedResiduals::new(e1.clone(), e1).unwrap();
    let g = LaggedGrams::new(&res, &KernelSpec::default(), &KernelSpec::default()).unwrap();
    assert!(g.single(0, Direction::One).unwrap() > 10.0 * g.single(1, Direction::One).unwrap());
    assert!(g_test(&res, 0, Variant::One).unwrap().p_value < 1e-10);
}
