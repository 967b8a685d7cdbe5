//! HSIC V-statistic and the single-lag / joint statistics built on
//! fitted-model residuals.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{gram_matrix, GramMatrix, KernelSpec};
use crate::series::MultiSeries;

/// Residuals of the two fitted models, aligned in time.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedResiduals {
    eta1: MultiSeries,
    eta2: MultiSeries,
}

impl PairedResiduals {
    pub fn new(eta1: MultiSeries, eta2: MultiSeries) -> Result<Self> {
        if eta1.nrows() != eta2.nrows() {
            return Err(Error::Dimension(format!(
                "residual series have {} and {} rows",
                eta1.nrows(),
                eta2.nrows()
            )));
        }
        eta1.check_finite()?;
        eta2.check_finite()?;
        Ok(Self { eta1, eta2 })
    }

    pub fn eta1(&self) -> &MultiSeries {
        &self.eta1
    }

    pub fn eta2(&self) -> &MultiSeries {
        &self.eta2
    }

    pub fn n(&self) -> usize {
        self.eta1.nrows()
    }
}

/// Which series is shifted forward by the lag.
///
/// `One` pairs `eta1[t]` with `eta2[t + m]`; `Two` pairs `eta1[t + m]` with `eta2[t]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Direction {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::One => "1",
            Direction::Two => "2",
        })
    }
}

/// Single-lag statistic `S(m)` or joint statistic `J(M) = S(0) + ... + S(M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LagConfig {
    Single { lag: usize, direction: Direction },
    Joint { max_lag: usize, direction: Direction },
}

impl LagConfig {
    pub fn single(lag: usize, direction: Direction) -> Self {
        Self::Single { lag, direction }
    }

    pub fn joint(max_lag: usize, direction: Direction) -> Self {
        Self::Joint { max_lag, direction }
    }

    /// Largest lag the statistic touches.
    pub fn max_lag(&self) -> usize {
        match *self {
            Self::Single { lag, .. } => lag,
            Self::Joint { max_lag, .. } => max_lag,
        }
    }

    pub fn direction(&self) -> Direction {
        match *self {
            Self::Single { direction, .. } | Self::Joint { direction, .. } => direction,
        }
    }

    /// Short label such as `S1(3)` or `J2(6)`.
    pub fn label(&self) -> String {
        match *self {
            Self::Single { lag, direction } => format!("S{direction}({lag})"),
            Self::Joint { max_lag, direction } => format!("J{direction}({max_lag})"),
        }
    }

    /// Errors unless the effective sample `n - lag` keeps at least two points.
    pub fn check_feasible(&self, n: usize) -> Result<()> {
        let lag = self.max_lag();
        if lag + 2 > n {
            return Err(Error::LagTooLarge { lag, n });
        }
        Ok(())
    }
}

/// Row sums of the `len x len` block of `g` starting at `(off, off)`.
fn block_row_means(g: &GramMatrix, off: usize, len: usize) -> (Vec<f64>, f64) {
    let inv = 1.0 / len as f64;
    let means: Vec<f64> = (0..len)
        .map(|i| g.row(off + i)[off..off + len].iter().sum::<f64>() * inv)
        .collect();
    let grand = means.iter().sum::<f64>() * inv;
    (means, grand)
}

/// HSIC on diagonal blocks: points `k_off..k_off+len` of `k` paired with
/// points `l_off..l_off+len` of `l`.
///
/// Computes `(1/N^2) <HKH, HLH>` from row and grand means; `H` is never formed.
pub fn hsic_block(k: &GramMatrix, k_off: usize, l: &GramMatrix, l_off: usize, len: usize) -> Result<f64> {
    if len < 2 {
        return Err(Error::InsufficientData { needed: 1, got: len });
    }
    if k_off + len > k.n_points() || l_off + len > l.n_points() {
        return Err(Error::Dimension(format!(
            "block of {len} at offsets ({k_off}, {l_off}) exceeds Gram sizes ({}, {})",
            k.n_points(),
            l.n_points()
        )));
    }
    let (rk, gk) = block_row_means(k, k_off, len);
    let (rl, gl) = block_row_means(l, l_off, len);
    let mut total = 0.0;
    for i in 0..len {
        let krow = &k.row(k_off + i)[k_off..k_off + len];
        let lrow = &l.row(l_off + i)[l_off..l_off + len];
        let (ci, di) = (gk - rk[i], gl - rl[i]);
        let mut acc = 0.0;
        for j in 0..len {
            acc += (krow[j] - rk[j] + ci) * (lrow[j] - rl[j] + di);
        }
        total += acc;
    }
    Ok(total / (len * len) as f64)
}

/// `(1/N^2) trace(K H L H)` with `H = I - 11'/N`.
pub fn hsic_v(k: &GramMatrix, l: &GramMatrix) -> Result<f64> {
    if k.n_points() != l.n_points() {
        return Err(Error::Dimension(format!("Gram sizes {} and {}", k.n_points(), l.n_points())));
    }
    hsic_block(k, 0, l, 0, k.n_points())
}

/// Literal three-sum form of the V-statistic, `O(N^4)`.
///
/// Exists as an independent check on [`hsic_v`]; only sensible for small `N`.
pub fn hsic_v_reference(k: &GramMatrix, l: &GramMatrix) -> Result<f64> {
    let n = k.n_points();
    if n != l.n_points() {
        return Err(Error::Dimension(format!("Gram sizes {n} and {}", l.n_points())));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 1, got: n });
    }
    let nf = n as f64;
    let mut first = 0.0;
    let mut second = 0.0;
    let mut third = 0.0;
    for i in 0..n {
        for j in 0..n {
            let kij = k.get(i, j);
            first += kij * l.get(i, j);
            for q in 0..n {
                third += kij * l.get(i, q);
                for r in 0..n {
                    second += kij * l.get(q, r);
                }
            }
        }
    }
    Ok(first / nf.powi(2) + second / nf.powi(4) - 2.0 * third / nf.powi(3))
}

/// Gram matrices over the full residual samples, from which every lagged
/// statistic is a diagonal-block computation.
pub struct LaggedGrams {
    k: GramMatrix,
    l: GramMatrix,
}

impl LaggedGrams {
    pub fn new(res: &PairedResiduals, kernel_k: &KernelSpec, kernel_l: &KernelSpec) -> Result<Self> {
        Ok(Self { k: gram_matrix(kernel_k, res.eta1())?, l: gram_matrix(kernel_l, res.eta2())? })
    }

    pub fn n(&self) -> usize {
        self.k.n_points()
    }

    /// `S(m)` in the given direction.
    pub fn single(&self, lag: usize, direction: Direction) -> Result<f64> {
        let n = self.n();
        LagConfig::single(lag, direction).check_feasible(n)?;
        let len = n - lag;
        match direction {
            Direction::One => hsic_block(&self.k, 0, &self.l, lag, len),
            Direction::Two => hsic_block(&self.k, lag, &self.l, 0, len),
        }
    }

    /// `J(M)`, summed in ascending lag order.
    pub fn joint(&self, max_lag: usize, direction: Direction) -> Result<f64> {
        LagConfig::joint(max_lag, direction).check_feasible(self.n())?;
        (0..=max_lag).map(|m| self.single(m, direction)).sum()
    }

    pub fn stat(&self, cfg: &LagConfig) -> Result<f64> {
        match *cfg {
            LagConfig::Single { lag, direction } => self.single(lag, direction),
            LagConfig::Joint { max_lag, direction } => self.joint(max_lag, direction),
        }
    }

    /// `n * stat` for the configured statistic.
    pub fn scaled(&self, cfg: &LagConfig) -> Result<f64> {
        Ok(scaled_stat(self.stat(cfg)?, self.n()))
    }
}

/// Single-lag HSIC statistic on lag-aligned residuals.
pub fn single_stat(
    res: &PairedResiduals,
    lag: usize,
    direction: Direction,
    kernel_k: &KernelSpec,
    kernel_l: &KernelSpec,
) -> Result<f64> {
    let n = res.n();
    LagConfig::single(lag, direction).check_feasible(n)?;
    let len = n - lag;
    let (a, b) = match direction {
        Direction::One => (res.eta1().slice_rows(0, len), res.eta2().slice_rows(lag, n)),
        Direction::Two => (res.eta1().slice_rows(lag, n), res.eta2().slice_rows(0, len)),
    };
    hsic_v(&gram_matrix(kernel_k, &a)?, &gram_matrix(kernel_l, &b)?)
}

/// Joint statistic `sum_{m=0}^{M} S(m)`.
pub fn joint_stat(
    res: &PairedResiduals,
    max_lag: usize,
    direction: Direction,
    kernel_k: &KernelSpec,
    kernel_l: &KernelSpec,
) -> Result<f64> {
    LagConfig::joint(max_lag, direction).check_feasible(res.n())?;
    LaggedGrams::new(res, kernel_k, kernel_l)?.joint(max_lag, direction)
}

/// Scales a statistic by the full residual sample size `n`.
#[inline]
pub fn scaled_stat(stat: f64, n: usize) -> f64 {
    n as f64 * stat
}
