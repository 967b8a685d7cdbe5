use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::crosscorr::{cross_cov, Variant};
use crate::hsic::{Direction, LagConfig};
use crate::models::fit_var;

fn draw(id: u8, n: usize, seed: u64) -> (MultiSeries, MultiSeries) {
    egp_innovations(&EgpSpec::new(id).unwrap(), n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn sq_norms(e: &MultiSeries) -> Vec<f64> {
    e.rows().map(|r| r[0] * r[0] + r[1] * r[1]).collect()
}

#[test]
fn specs_and_omega() {
    assert!(EgpSpec::new(0).is_err() && EgpSpec::new(7).is_err());
    for id in 1..=6 {
        let s = EgpSpec::new(id).unwrap();
        let o = s.omega();
        assert_eq!(o, o.transpose());
        assert!(o.clone().cholesky().is_some(), "EGP {id}");
    }
    assert_eq!(EgpSpec::new(2).unwrap().rho4, 0.3);
    assert_eq!(EgpSpec::new(5).unwrap().rho1, 0.8);
    assert_eq!(EgpSpec::new(3).unwrap().rho1, 0.0);
}

#[test]
fn unit_variances() {
    for id in 1..=6 {
        let (a, b) = draw(id, 10_000, id as u64);
        for v in [a.covariance()[0], a.covariance()[3], b.covariance()[0], b.covariance()[3]] {
            assert!((v - 1.0).abs() < 0.1, "EGP {id}: {v}");
        }
    }
}

#[test]
fn egp1_is_uncorrelated() {
    let (a, b) = draw(1, 5000, 11);
    let r = cross_cov(&a, &b, 0).unwrap();
    assert!(r.iter().all(|v| v.abs() <= 0.05), "{r}");
}

#[test]
fn egp2_lag_zero_correlation() {
    let (a, b) = draw(2, 5000, 12);
    for j in 0..2 {
        assert!((corr(&a.column(j), &b.column(j)) - 0.3).abs() <= 0.05);
    }
    let r1 = cross_cov(&a, &b, 1).unwrap();
    assert!(r1.iter().all(|v| v.abs() <= 0.05));
}

#[test]
fn egp4_dependence_sits_at_lag_three() {
    let (a, b) = draw(4, 5000, 13);
    let (qa, qb) = (sq_norms(&a), sq_norms(&b));
    let lead = corr(&qa[3..], &qb[..qb.len() - 3]);
    let same = corr(&qa, &qb);
    assert!(lead > 0.1, "{lead}");
    assert!(same.abs() <= 0.05, "{same}");
}

#[test]
fn draws_are_reproducible() {
    assert_eq!(draw(4, 50, 1), draw(4, 50, 1));
    assert_ne!(draw(4, 50, 1), draw(4, 50, 2));
}

#[test]
fn var_design_is_stable() {
    for a in [MODEL_5_1_A1, MODEL_5_1_A2] {
        let m = crate::linalg::from_row_major(2, &a);
        assert!(m.complex_eigenvalues().iter().all(|l| l.norm() < 1.0));
    }
    let z = MultiSeries::zeros(600, 2);
    let (y1, y2) = gen_model_5_1(&z, &z, 500).unwrap();
    assert_eq!(y1.nrows(), 100);
    assert!(y1.as_slice().iter().chain(y2.as_slice()).all(|v| *v == 0.0));
}

#[test]
fn var_design_is_recovered() {
    let (e1, e2) = draw(1, 2500, 21);
    let (y1, y2) = gen_model_5_1(&e1, &e2, 500).unwrap();
    for (y, a) in [(y1, MODEL_5_1_A1), (y2, MODEL_5_1_A2)] {
        let fit = fit_var(&y, 1, false).unwrap();
        for (est, truth) in fit.theta.iter().zip(a) {
            assert!((est - truth).abs() <= 0.1, "{est} vs {truth}");
        }
    }
}

#[test]
fn garch_design_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let e: Vec<f64> = (0..201_000).map(|_| rng.sample(StandardNormal)).collect();
    let e = MultiSeries::new(100_500, 2, e).unwrap();
    let (y1, _) = gen_model_5_2(&e, &e, 500).unwrap();
    let cov = y1.covariance();
    assert!((cov[0] - 0.5).abs() < 0.03 && (cov[3] - 0.5).abs() < 0.03, "{cov:?}");
}

fn small_config(replications: usize) -> McConfig {
    let tests = vec![
        TestSpec::Hsic { lag: LagConfig::single(0, Direction::One) },
        TestSpec::G { max_lag: 2, variant: Variant::One },
        TestSpec::L { max_lag: 2, variant: Variant::Two },
    ];
    let mut cfg = McConfig::new(Dgp::Model51, EgpSpec::new(2).unwrap(), 60, replications, tests);
    cfg.bootstrap.replicates = 19;
    cfg.master_seed = 5;
    cfg
}

#[test]
fn single_replication_rates_are_binary() {
    let s = run_monte_carlo(&small_config(1)).unwrap();
    assert_eq!(s.rows.len(), 9);
    assert!(s.rows.iter().all(|r| r.rejection_rate == 0.0 || r.rejection_rate == 1.0));
}

#[test]
fn summary_counts_match_indicators_and_repeat() {
    let cfg = small_config(6);
    let outs = run_replications(&cfg).unwrap();
    let ind: Vec<_> = outs.iter().map(|o| o.as_ref().unwrap().clone()).collect();
    let s = summarize(&cfg, outs).unwrap();
    for (t, _) in cfg.tests.iter().enumerate() {
        for (a, _) in cfg.bootstrap.alphas.iter().enumerate() {
            let k: usize = ind.iter().map(|i| usize::from(i[t][a])).sum();
            assert_eq!(s.rows[t * 3 + a].rejections, k);
        }
    }
    assert!(s.failed_replications.is_empty());
    assert_eq!(s, run_monte_carlo(&cfg).unwrap());
}

#[test]
fn config_validation() {
    let mut cfg = small_config(1);
    cfg.tests.push(TestSpec::Hsic { lag: LagConfig::single(80, Direction::One) });
    assert!(run_monte_carlo(&cfg).is_err());
    assert!(run_monte_carlo(&small_config(0)).is_err());
}

#[test]
fn test_names_roundtrip() {
    for dgp in [Dgp::Model51, Dgp::Model52] {
        for t in dgp.default_tests() {
            let label = t.label();
            assert!(!label.is_empty());
        }
    }
    assert_eq!("s2:3".parse::<TestSpec>().unwrap().label(), "S2(3)");
    assert_eq!("j1:6".parse::<TestSpec>().unwrap().label(), "J1(6)");
    assert_eq!("w2:h3".parse::<TestSpec>().unwrap().label(), "W2(h3)");
    assert_eq!("t1:3".parse::<TestSpec>().unwrap().label(), "T1(3)");
    for bad in ["x1:3", "s3:0", "s1", "w1:h9", "g1:-1"] {
        assert!(bad.parse::<TestSpec>().is_err(), "{bad}");
    }
}
