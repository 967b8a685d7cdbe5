//! Cross-correlation based independence tests used as competitors to the
//! HSIC tests: the portmanteau `G`, the kernel-weighted `W`, and the
//! squared-residual `L` and `T` statistics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hsic::{Direction, PairedResiduals};
use crate::linalg;
use crate::models::fit_var;
use crate::outcome::{CriticalValue, Reference, TestOutcome, DEFAULT_ALPHAS};
use crate::series::MultiSeries;

pub mod special;

pub use special::{chi2_isf, chi2_sf, norm_isf, norm_sf};

/// `r_ab(m) = (1/n) sum_t (a_t - mean a)(b_{t+m} - mean b)'` over valid `t`.
pub fn cross_cov(a: &MultiSeries, b: &MultiSeries, m: isize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::Dimension(format!("series have {n} and {} rows", b.nrows())));
    }
    if m.unsigned_abs() >= n {
        return Err(Error::LagTooLarge { lag: m.unsigned_abs(), n });
    }
    Ok(cross_cov_centered(&center(a), &center(b), m))
}

fn center(a: &MultiSeries) -> MultiSeries {
    let mean = a.column_means();
    let mut out = a.clone();
    for t in 0..out.nrows() {
        for (v, m) in out.row_mut(t).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    out
}

fn cross_cov_centered(a: &MultiSeries, b: &MultiSeries, m: isize) -> DMatrix<f64> {
    let n = a.nrows();
    let (da, db) = (a.ncols(), b.ncols());
    let mut out = DMatrix::<f64>::zeros(da, db);
    let (t0, t1) = if m >= 0 { (0, n - m as usize) } else { (m.unsigned_abs(), n) };
    for t in t0..t1 {
        let ar = a.row(t);
        let br = b.row((t as isize + m) as usize);
        for i in 0..da {
            for j in 0..db {
                out[(i, j)] += ar[i] * br[j];
            }
        }
    }
    out / n as f64
}

/// Cross-covariance matrices of two series over lags `-max_lag..=max_lag`.
#[derive(Debug, Clone)]
pub struct CrossCovSet {
    pub n: usize,
    pub max_lag: usize,
    mats: Vec<DMatrix<f64>>,
    /// Lag-zero autocovariances of each series.
    pub auto_a: DMatrix<f64>,
    pub auto_b: DMatrix<f64>,
}

impl CrossCovSet {
    pub fn new(a: &MultiSeries, b: &MultiSeries, max_lag: usize) -> Result<Self> {
        let n = a.nrows();
        if b.nrows() != n {
            return Err(Error::Dimension(format!("series have {n} and {} rows", b.nrows())));
        }
        if max_lag >= n {
            return Err(Error::LagTooLarge { lag: max_lag, n });
        }
        let (ca, cb) = (center(a), center(b));
        let m = max_lag as isize;
        let mats = (-m..=m).map(|lag| cross_cov_centered(&ca, &cb, lag)).collect();
        Ok(Self {
            n,
            max_lag,
            mats,
            auto_a: cross_cov_centered(&ca, &ca, 0),
            auto_b: cross_cov_centered(&cb, &cb, 0),
        })
    }

    pub fn get(&self, m: isize) -> &DMatrix<f64> {
        &self.mats[(m + self.max_lag as isize) as usize]
    }
}

/// `n tr(X' A^-1 X B^-1)`; the building block of `G`, `W` and `T`.
fn quad_trace(x: &DMatrix<f64>, a_inv: &DMatrix<f64>, b_inv: &DMatrix<f64>) -> f64 {
    (x.transpose() * a_inv * x * b_inv).trace()
}

/// Correlation scaling `D(r)^{-1/2}` of a covariance matrix.
fn inv_sd_diag(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = r.nrows();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        if !(r[(i, i)] > 0.0) {
            return Err(Error::Singular(format!("component {i} has zero variance")));
        }
        out[(i, i)] = 1.0 / r[(i, i)].sqrt();
    }
    Ok(out)
}

/// Computes `Z(m) = n vec(R12(m))' [R22(0)^-1 (x) R11(0)^-1] vec(R12(m))` for a
/// set of lags, with `R` the correlation-scaled cross-covariances.
struct ZStat {
    n: usize,
    da: DMatrix<f64>,
    db: DMatrix<f64>,
    r11_inv: DMatrix<f64>,
    r22_inv: DMatrix<f64>,
    a: MultiSeries,
    b: MultiSeries,
}

impl ZStat {
    fn new(a: &MultiSeries, b: &MultiSeries) -> Result<Self> {
        if a.nrows() != b.nrows() {
            return Err(Error::Dimension(format!("series have {} and {} rows", a.nrows(), b.nrows())));
        }
        let (a, b) = (center(a), center(b));
        let r11 = cross_cov_centered(&a, &a, 0);
        let r22 = cross_cov_centered(&b, &b, 0);
        let da = inv_sd_diag(&r11)?;
        let db = inv_sd_diag(&r22)?;
        let r11_inv = linalg::inverse_spd(&(&da * &r11 * &da))?;
        let r22_inv = linalg::inverse_spd(&(&db * &r22 * &db))?;
        Ok(Self { n: a.nrows(), da, db, r11_inv, r22_inv, a, b })
    }

    fn z(&self, m: isize) -> f64 {
        let r12 = &self.da * cross_cov_centered(&self.a, &self.b, m) * &self.db;
        self.n as f64 * quad_trace(&r12, &self.r11_inv, &self.r22_inv)
    }
}

fn check_max_lag(max_lag: usize, n: usize) -> Result<()> {
    if max_lag + 1 >= n {
        return Err(Error::LagTooLarge { lag: max_lag, n });
    }
    Ok(())
}

/// Small-sample correction variant of the portmanteau tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Plain `n`-weighted sum.
    #[serde(rename = "1")]
    One,
    /// Lag-dependent weights `n / (n - |m|)`.
    #[serde(rename = "2")]
    Two,
}

impl Variant {
    fn index(self) -> u8 {
        match self {
            Variant::One => 1,
            Variant::Two => 2,
        }
    }

    fn weight(self, n: usize, m: isize) -> f64 {
        match self {
            Variant::One => 1.0,
            Variant::Two => n as f64 / (n - m.unsigned_abs()) as f64,
        }
    }
}

fn chi2_outcome(test: String, stat: f64, df: usize, n: usize, max_lag: usize) -> Result<TestOutcome> {
    let critical_values = DEFAULT_ALPHAS
        .iter()
        .map(|&alpha| Ok(CriticalValue { alpha, value: Some(chi2_isf(alpha, df)?) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(TestOutcome {
        test,
        statistic: stat,
        scaled: stat,
        p_value: chi2_sf(stat, df)?,
        critical_values,
        reference: Reference::ChiSquare { df },
        n,
        n_effective: n,
        lag: None,
        max_lag: Some(max_lag),
        direction: None,
        bandwidth: None,
        replicates: None,
    })
}

/// Portmanteau test on residual cross-correlations over lags `-M..=M`,
/// referred to `chi^2((2M+1) d1 d2)`.
pub fn g_test(res: &PairedResiduals, max_lag: usize, variant: Variant) -> Result<TestOutcome> {
    let n = res.n();
    check_max_lag(max_lag, n)?;
    let z = ZStat::new(res.eta1(), res.eta2())?;
    let m = max_lag as isize;
    let stat: f64 = (-m..=m).map(|lag| variant.weight(n, lag) * z.z(lag)).sum();
    let df = (2 * max_lag + 1) * res.eta1().ncols() * res.eta2().ncols();
    chi2_outcome(format!("G{}({max_lag})", variant.index()), stat, df, n, max_lag)
}

/// The Daniell kernel `sin(pi z) / (pi z)`.
pub fn daniell(z: f64) -> f64 {
    let x = std::f64::consts::PI * z;
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `int K(z)^2 dz` for the Daniell kernel.
pub const DANIELL_A1: f64 = 1.0;
/// `int K(z)^4 dz` for the Daniell kernel.
pub const DANIELL_B1: f64 = 2.0 / 3.0;

/// `sum_{|m|<n} (1 - |m|/n) K(m/h)^2`.
pub fn a1n(h: f64, n: usize) -> f64 {
    let nf = n as f64;
    let n = n as isize;
    (1 - n..n)
        .map(|m| (1.0 - m.unsigned_abs() as f64 / nf) * daniell(m as f64 / h).powi(2))
        .sum()
}

/// `sum_{|m|<n} (1 - |m|/n)(1 - (|m|+1)/n) K(m/h)^4`.
pub fn b1n(h: f64, n: usize) -> f64 {
    let nf = n as f64;
    let n = n as isize;
    (1 - n..n)
        .map(|m| {
            let a = m.unsigned_abs() as f64;
            (1.0 - a / nf) * (1.0 - (a + 1.0) / nf) * daniell(m as f64 / h).powi(4)
        })
        .sum()
}

/// Bandwidth rules `h1 = [ln n]`, `h2 = [3 n^0.2]`, `h3 = [3 n^0.3]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthRule {
    H1,
    H2,
    H3,
}

impl BandwidthRule {
    pub fn label(self) -> &'static str {
        match self {
            BandwidthRule::H1 => "h1",
            BandwidthRule::H2 => "h2",
            BandwidthRule::H3 => "h3",
        }
    }
}

pub fn bandwidth_rule(rule: BandwidthRule, n: usize) -> usize {
    let nf = n as f64;
    let h = match rule {
        BandwidthRule::H1 => nf.ln(),
        BandwidthRule::H2 => 3.0 * nf.powf(0.2),
        BandwidthRule::H3 => 3.0 * nf.powf(0.3),
    };
    h.floor() as usize
}

/// Prewhitening VAR order: 3 below 150 observations, 6 from there on.
pub fn auto_var_order(n: usize) -> usize {
    if n < 150 {
        3
    } else {
        6
    }
}

/// Kernel-weighted test summing `K(m/h)^2 Z(m)` over every lag, on residuals
/// of VAR(`order`) fits to the raw series; standard normal reference.
pub fn w_test(
    data1: &MultiSeries,
    data2: &MultiSeries,
    order: usize,
    intercept: bool,
    h: usize,
    variant: Variant,
) -> Result<TestOutcome> {
    if data1.nrows() != data2.nrows() {
        return Err(Error::Dimension(format!("series have {} and {} rows", data1.nrows(), data2.nrows())));
    }
    if h == 0 || h >= data1.nrows() {
        return Err(Error::InvalidParameter(format!("bandwidth {h} must lie in [1, n)")));
    }
    let f1 = fit_var(data1, order, intercept)?;
    let f2 = fit_var(data2, order, intercept)?;
    let (e1, e2) = (f1.effective_residuals(), f2.effective_residuals());
    let n = e1.nrows();
    let z = ZStat::new(&e1, &e2)?;
    let hf = h as f64;
    let ni = n as isize;
    let weighted: f64 = (1 - ni..ni).map(|m| daniell(m as f64 / hf).powi(2) * z.z(m)).sum();
    let dd = (e1.ncols() * e2.ncols()) as f64;
    let stat = match variant {
        Variant::One => (weighted - dd * a1n(hf, n)) / (2.0 * dd * b1n(hf, n)).sqrt(),
        Variant::Two => (weighted - hf * dd * DANIELL_A1) / (2.0 * hf * dd * DANIELL_B1).sqrt(),
    };
    let critical_values = DEFAULT_ALPHAS
        .iter()
        .map(|&alpha| Ok(CriticalValue { alpha, value: Some(norm_isf(alpha)?) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(TestOutcome {
        test: format!("W{}(h={h})", variant.index()),
        statistic: stat,
        scaled: stat,
        p_value: norm_sf(stat)?,
        critical_values,
        reference: Reference::StandardNormal,
        n,
        n_effective: n,
        lag: None,
        max_lag: None,
        direction: None,
        bandwidth: Some(h),
        replicates: None,
    })
}

/// Squared norms `q_t = eta_t' eta_t`.
fn squared_norms(eta: &MultiSeries) -> MultiSeries {
    MultiSeries::from_column(&eta.rows().map(|r| r.iter().map(|v| v * v).sum()).collect::<Vec<f64>>())
}

/// Half-vectorized outer products `vech(eta_t eta_t')`.
fn vech_outer(eta: &MultiSeries) -> MultiSeries {
    let d = eta.ncols();
    let dstar = d * (d + 1) / 2;
    let mut out = MultiSeries::zeros(eta.nrows(), dstar);
    for t in 0..eta.nrows() {
        let e = eta.row(t).to_vec();
        let row = out.row_mut(t);
        let mut k = 0;
        for j in 0..d {
            for i in j..d {
                row[k] = e[i] * e[j];
                k += 1;
            }
        }
    }
    out
}

/// Per-lag squared cross-correlation of the squared-norm series.
struct LStat {
    qa: MultiSeries,
    qb: MultiSeries,
    denom: f64,
}

impl LStat {
    fn new(res: &PairedResiduals) -> Result<Self> {
        let (qa, qb) = (squared_norms(res.eta1()), squared_norms(res.eta2()));
        let variance = |q: &MultiSeries| {
            let c = center(q);
            let v = cross_cov_centered(&c, &c, 0)[(0, 0)];
            let scale = q.as_slice().iter().map(|x| x * x).sum::<f64>() / q.nrows() as f64;
            if v > 1e-14 * scale {
                Ok((c, v))
            } else {
                Err(Error::Degenerate("squared-norm series has zero variance".into()))
            }
        };
        let (qa, va) = variance(&qa)?;
        let (qb, vb) = variance(&qb)?;
        Ok(Self { qa, qb, denom: va * vb })
    }

    fn rho2(&self, m: isize) -> f64 {
        cross_cov_centered(&self.qa, &self.qb, m)[(0, 0)].powi(2) / self.denom
    }
}

/// Per-lag trace statistic on the vech-transformed series.
struct TStat {
    pa: MultiSeries,
    pb: MultiSeries,
    c11_inv: DMatrix<f64>,
    c22_inv: DMatrix<f64>,
}

impl TStat {
    fn new(res: &PairedResiduals) -> Result<Self> {
        let pa = center(&vech_outer(res.eta1()));
        let pb = center(&vech_outer(res.eta2()));
        let c11_inv = linalg::inverse_spd(&cross_cov_centered(&pa, &pa, 0))?;
        let c22_inv = linalg::inverse_spd(&cross_cov_centered(&pb, &pb, 0))?;
        Ok(Self { pa, pb, c11_inv, c22_inv })
    }

    fn trace(&self, m: isize) -> f64 {
        quad_trace(&cross_cov_centered(&self.pa, &self.pb, m), &self.c11_inv, &self.c22_inv)
    }

    fn df_per_lag(&self) -> usize {
        self.pa.ncols() * self.pb.ncols()
    }
}

fn square_weight(variant: Variant, n: usize, m: isize) -> f64 {
    n as f64 * variant.weight(n, m)
}

/// Cross-correlation test on squared residual norms; `chi^2(2M+1)` reference.
pub fn l_test(res: &PairedResiduals, max_lag: usize, variant: Variant) -> Result<TestOutcome> {
    let n = res.n();
    check_max_lag(max_lag, n)?;
    let l = LStat::new(res)?;
    let m = max_lag as isize;
    let stat: f64 = (-m..=m).map(|lag| square_weight(variant, n, lag) * l.rho2(lag)).sum();
    chi2_outcome(format!("L{}({max_lag})", variant.index()), stat, 2 * max_lag + 1, n, max_lag)
}

/// Cross-covariance test on `vech(eta eta')`; `chi^2((2M+1) d1* d2*)` reference.
pub fn t_test(res: &PairedResiduals, max_lag: usize, variant: Variant) -> Result<TestOutcome> {
    let n = res.n();
    check_max_lag(max_lag, n)?;
    let t = TStat::new(res)?;
    let m = max_lag as isize;
    let stat: f64 = (-m..=m).map(|lag| square_weight(variant, n, lag) * t.trace(lag)).sum();
    let df = (2 * max_lag + 1) * t.df_per_lag();
    chi2_outcome(format!("T{}({max_lag})", variant.index()), stat, df, n, max_lag)
}

/// Which squared-residual statistic a single-lag scan uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SquaredFamily {
    L,
    T,
}

/// One-lag `L` or `T` value: direction `One` uses lag `m`, `Two` uses `-m`.
/// Returns the statistic and its chi-square degrees of freedom.
pub fn single_lag_variants(res: &PairedResiduals, m: usize, family: SquaredFamily, direction: Direction) -> Result<(f64, usize)> {
    let n = res.n();
    check_max_lag(m, n)?;
    let lag = match direction {
        Direction::One => m as isize,
        Direction::Two => -(m as isize),
    };
    match family {
        SquaredFamily::L => Ok((n as f64 * LStat::new(res)?.rho2(lag), 1)),
        SquaredFamily::T => {
            let t = TStat::new(res)?;
            Ok((n as f64 * t.trace(lag), t.df_per_lag()))
        }
    }
}

/// Single-lag `L` and `T` values over `0..=max_lag` in one direction,
/// sharing the transformed series across lags.
pub fn single_lag_scan(res: &PairedResiduals, max_lag: usize, family: SquaredFamily, direction: Direction) -> Result<Vec<f64>> {
    let n = res.n();
    check_max_lag(max_lag, n)?;
    let sign = match direction {
        Direction::One => 1,
        Direction::Two => -1,
    };
    match family {
        SquaredFamily::L => {
            let l = LStat::new(res)?;
            Ok((0..=max_lag).map(|m| n as f64 * l.rho2(sign * m as isize)).collect())
        }
        SquaredFamily::T => {
            let t = TStat::new(res)?;
            Ok((0..=max_lag).map(|m| n as f64 * t.trace(sign * m as isize)).collect())
        }
    }
}

#[cfg(test)]
mod tests;
