use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use super::*;

fn normals(seed: u64, n: usize, d: usize) -> MultiSeries {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    MultiSeries::new(n, d, (0..n * d).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

fn pair(seed: u64, n: usize) -> PairedResiduals {
    PairedResiduals::new(normals(seed, n, 2), normals(seed + 1_000_003, n, 2)).unwrap()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

/// `Gamma(k/2)` by the half-integer recursion.
fn half_gamma(k: usize) -> f64 {
    let mut g = if k % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut a = if k % 2 == 0 { 1.0 } else { 0.5 };
    while a < k as f64 / 2.0 - 1e-9 {
        g *= a;
        a += 1.0;
    }
    g
}

/// `P(X <= x)` by integrating the density after substituting `t = u^2`,
/// which removes the singularity at zero for one degree of freedom.
fn chi2_cdf_oracle(x: f64, df: usize) -> f64 {
    let k = df as f64 / 2.0;
    let c = 1.0 / (2f64.powf(k) * half_gamma(df));
    let f = move |u: f64| 2.0 * c * u.powf(df as f64 - 1.0) * (-u * u / 2.0).exp();
    integrate(&f, 0.0, x.sqrt(), 1e-14)
}

fn norm_sf_oracle(z: f64) -> f64 {
    let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let inner = integrate(&phi, 0.0, z.abs(), 1e-14);
    if z >= 0.0 {
        0.5 - inner
    } else {
        0.5 + inner
    }
}

#[test]
fn chi_square_tail_matches_quadrature() {
    let dfs = [1, 2, 3, 5, 9, 27, 63];
    let xs = [0.1, 0.5, 1.0, 2.0, 3.841_458_820_694_124, 7.0, 12.0];
    let mut count = 0;
    for &df in &dfs {
        for &x in &xs {
            let oracle = 1.0 - chi2_cdf_oracle(x * (1.0 + df as f64 / 8.0), df);
            let got = chi2_sf(x * (1.0 + df as f64 / 8.0), df).unwrap();
            assert!((got - oracle).abs() < 1e-8, "df={df} x={x}: {got} vs {oracle}");
            count += 1;
        }
    }
    assert!(count >= 49);
    assert!((chi2_sf(3.8415, 1).unwrap() - 0.05).abs() < 1e-4);
}

#[test]
fn normal_tail_matches_quadrature() {
    for i in 0..50 {
        let z = -5.0 + 10.0 * i as f64 / 49.0;
        assert!((norm_sf(z).unwrap() - norm_sf_oracle(z)).abs() < 1e-8, "z={z}");
    }
}

/// `int_{-inf}^{inf} K(z)^p dz` over `[-Z, Z]` in unit pieces plus the
/// leading-order tail `2 * int_Z^inf (2 pi^2 z^2)^{-1} dz` for `p = 2`.
fn daniell_moment(p: i32) -> f64 {
    let z_max = 20_000;
    let f = |z: f64| daniell(z).powi(p);
    let body: f64 = (0..z_max).map(|k| integrate(&f, k as f64, k as f64 + 1.0, 1e-15)).sum();
    let tail = if p == 2 { 1.0 / (2.0 * std::f64::consts::PI.powi(2) * z_max as f64) } else { 0.0 };
    2.0 * (body + tail)
}

#[test]
fn daniell_constants_match_quadrature() {
    assert!((daniell_moment(2) - DANIELL_A1).abs() < 1e-6);
    assert!((daniell_moment(4) - DANIELL_B1).abs() < 1e-6);
}

#[test]
fn daniell_shape() {
    assert_eq!(daniell(0.0), 1.0);
    assert!(daniell(1.0).abs() < 1e-15);
    for z in [0.3, 1.7, 12.25] {
        assert_eq!(daniell(z), daniell(-z));
    }
}

#[test]
fn finite_sample_kernel_sums() {
    let (h, n) = (5.0, 100usize);
    let mut direct = 0.0;
    for m in -99i32..=99 {
        direct += (1.0 - m.abs() as f64 / 100.0) * daniell(m as f64 / h).powi(2);
    }
    assert!((a1n(h, n) - direct).abs() < 1e-12);
    assert!(b1n(h, n) > 0.0 && b1n(h, n) < a1n(h, n));
}

#[test]
fn bandwidths() {
    assert_eq!(bandwidth_rule(BandwidthRule::H1, 100), 4);
    assert_eq!(bandwidth_rule(BandwidthRule::H2, 100), 7);
    assert_eq!(bandwidth_rule(BandwidthRule::H3, 200), 14);
    assert_eq!(auto_var_order(100), 3);
    assert_eq!(auto_var_order(200), 6);
}

#[test]
fn reflection_identity_is_exact() {
    let a = normals(1, 40, 2);
    let b = normals(2, 40, 3);
    for m in -39isize..=39 {
        assert_eq!(cross_cov(&a, &b, -m).unwrap(), cross_cov(&b, &a, m).unwrap().transpose());
    }
    assert!(cross_cov(&a, &b, 40).is_err());
    let set = CrossCovSet::new(&a, &b, 5).unwrap();
    assert_eq!(*set.get(-2), cross_cov(&a, &b, -2).unwrap());
}

#[test]
fn lag_zero_auto_is_covariance() {
    let a = normals(3, 50, 2);
    let c = cross_cov(&a, &a, 0).unwrap();
    let cov = a.covariance();
    for i in 0..2 {
        for j in 0..2 {
            assert!((c[(i, j)] - cov[i * 2 + j]).abs() < 1e-14);
        }
    }
}

#[test]
fn independent_cross_covariance_is_small() {
    let a = normals(5, 5000, 1);
    let b = normals(6, 5000, 1);
    assert!(cross_cov(&a, &b, 1).unwrap()[(0, 0)].abs() <= 0.05);
}

/// Mean-zero columns on disjoint supports separated by more than `max_lag`.
fn orthogonal_pair(n: usize) -> PairedResiduals {
    let mut a = MultiSeries::zeros(n, 2);
    let mut b = MultiSeries::zeros(n, 2);
    let half = n / 2;
    for t in 0..16 {
        let s1 = if t % 2 == 0 { 1.0 } else { -1.0 };
        let s2 = if (t / 2) % 2 == 0 { 1.0 } else { -1.0 };
        a.set(t, 0, s1);
        a.set(t, 1, s2 * (1.0 + (t % 3) as f64));
        b.set(half + t, 0, s2);
        b.set(half + t, 1, s1 * (2.0 + (t % 5) as f64));
    }
    let fix = |s: &mut MultiSeries, off: usize| {
        for j in 0..2 {
            let sum: f64 = (off..off + 16).map(|t| s.get(t, j)).sum();
            s.set(off + 16, j, -sum);
        }
    };
    fix(&mut a, 0);
    fix(&mut b, half);
    PairedResiduals::new(a, b).unwrap()
}

#[test]
fn orthogonal_residuals_give_zero_g() {
    let res = orthogonal_pair(80);
    for v in [Variant::One, Variant::Two] {
        let out = g_test(&res, 3, v).unwrap();
        assert_eq!(out.statistic, 0.0);
        assert_eq!(out.p_value, 1.0);
    }
    assert!(t_test(&res, 3, Variant::One).unwrap().statistic >= 0.0);
}

#[test]
fn degrees_of_freedom() {
    let res = pair(7, 120);
    assert_eq!(g_test(&res, 3, Variant::One).unwrap().reference, Reference::ChiSquare { df: 28 });
    assert_eq!(l_test(&res, 3, Variant::One).unwrap().reference, Reference::ChiSquare { df: 7 });
    assert_eq!(t_test(&res, 3, Variant::One).unwrap().reference, Reference::ChiSquare { df: 63 });
    assert_eq!(single_lag_variants(&res, 2, SquaredFamily::T, Direction::One).unwrap().1, 9);
    assert_eq!(single_lag_variants(&res, 2, SquaredFamily::L, Direction::Two).unwrap().1, 1);
}

#[test]
fn variants_agree_at_lag_zero_and_order_beyond() {
    for seed in 0..5 {
        let res = pair(10 + seed, 90);
        type TestFn = fn(&PairedResiduals, usize, Variant) -> Result<TestOutcome>;
        for f in [g_test as TestFn, l_test, t_test] {
            let (a, b) = (f(&res, 0, Variant::One).unwrap(), f(&res, 0, Variant::Two).unwrap());
            assert_eq!(a.statistic, b.statistic);
            let (a, b) = (f(&res, 4, Variant::One).unwrap(), f(&res, 4, Variant::Two).unwrap());
            assert!(a.statistic >= 0.0 && b.statistic >= a.statistic);
        }
    }
}

#[test]
fn constant_squared_norm_is_rejected() {
    let n = 60;
    let rows: Vec<[f64; 2]> = (0..n).map(|t| [(t as f64).cos(), (t as f64).sin()]).collect();
    let res = PairedResiduals::new(MultiSeries::from_rows(&rows).unwrap(), normals(9, n, 2)).unwrap();
    assert!(matches!(l_test(&res, 2, Variant::One), Err(Error::Degenerate(_))));
}

#[test]
fn single_lags_sum_to_joint() {
    let res = pair(21, 150);
    for (family, f) in [(SquaredFamily::L, l_test as fn(&PairedResiduals, usize, Variant) -> Result<TestOutcome>), (SquaredFamily::T, t_test)] {
        let joint = f(&res, 3, Variant::One).unwrap().statistic;
        let mut sum = 0.0;
        for m in 0..=3 {
            sum += single_lag_variants(&res, m, family, Direction::One).unwrap().0;
            if m > 0 {
                sum += single_lag_variants(&res, m, family, Direction::Two).unwrap().0;
            }
        }
        assert!((sum - joint).abs() <= 1e-10 * joint.max(1.0));
        let a = single_lag_variants(&res, 0, family, Direction::One).unwrap().0;
        let b = single_lag_variants(&res, 0, family, Direction::Two).unwrap().0;
        assert_eq!(a, b);
        let scan = single_lag_scan(&res, 3, family, Direction::Two).unwrap();
        assert_eq!(scan[2], single_lag_variants(&res, 2, family, Direction::Two).unwrap().0);
    }
}

fn ks_uniform(mut p: Vec<f64>) -> f64 {
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    p.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn null_p_values_are_uniform() {
    let reps = 500;
    let mut g = Vec::new();
    let mut l = Vec::new();
    let mut t = Vec::new();
    for seed in 0..reps {
        let res = pair(100_000 + seed, 2000);
        g.push(g_test(&res, 3, Variant::One).unwrap().p_value);
        l.push(l_test(&res, 3, Variant::One).unwrap().p_value);
        t.push(t_test(&res, 3, Variant::One).unwrap().p_value);
    }
    for (name, p) in [("G", g), ("L", l), ("T", t)] {
        let d = ks_uniform(p);
        assert!(d <= 0.1, "{name}: KS distance {d}");
    }
}

#[test]
fn w_variants_converge() {
    let n = 2000;
    let (a, b) = (normals(31, n, 2), normals(32, n, 2));
    let h = bandwidth_rule(BandwidthRule::H1, n);
    let w1 = w_test(&a, &b, auto_var_order(n), true, h, Variant::One).unwrap();
    let w2 = w_test(&a, &b, auto_var_order(n), true, h, Variant::Two).unwrap();
    assert!((w1.statistic - w2.statistic).abs() <= 0.5, "{} vs {}", w1.statistic, w2.statistic);
    assert_eq!(w1.reference, Reference::StandardNormal);
    assert_eq!(w1.n, n - 6);
    assert!(w_test(&a, &b, 1, true, 0, Variant::One).is_err());
}
