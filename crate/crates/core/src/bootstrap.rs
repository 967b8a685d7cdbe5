//! Residual bootstrap for the HSIC statistics.
//!
//! Each replicate resamples the standardized residuals of both series
//! independently, regenerates both series through their fitted dynamics,
//! re-estimates, and recomputes the requested statistics on the new residuals.
//! Replicate `b` draws series `s` from its own keyed stream, so results are
//! identical for any thread count.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hsic::{scaled_stat, LagConfig, LaggedGrams, PairedResiduals};
use crate::kernels::KernelSpec;
use crate::linalg;
use crate::models::{residuals_with, simulate_fit, CccParams, FitResult, ModelSpec, SimulateOptions, DEFAULT_BURN_IN};
use crate::outcome::{CriticalValue, Reference, TestOutcome};
use crate::parallel;
use crate::rng::{self, Purpose};
use crate::series::MultiSeries;

/// Share of replicates allowed to fail before the run is aborted.
pub const FAILURE_BUDGET: f64 = 0.02;

/// How each bootstrap path is re-estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    /// Full refit for VAR, one-step for CCC-GARCH.
    #[default]
    Auto,
    /// Re-run the estimator on every bootstrap path.
    FullRefit,
    /// `theta + mean influence` evaluated on the bootstrap path.
    OneStep,
}

impl EstimatorMode {
    pub fn resolve(self, spec: &ModelSpec) -> Self {
        match (self, spec) {
            (Self::Auto, ModelSpec::Var { .. }) => Self::FullRefit,
            (Self::Auto, ModelSpec::CccGarch) => Self::OneStep,
            (mode, _) => mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub alphas: Vec<f64>,
    pub estimator: EstimatorMode,
    pub master_seed: u64,
    /// Whiten CCC-GARCH residuals to identity covariance before resampling;
    /// when off, residuals are only centered.
    pub standardize: bool,
    pub burn_in: usize,
    /// Keep every replicate statistic in the outcome.
    pub keep_replicates: bool,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 199,
            alphas: crate::outcome::DEFAULT_ALPHAS.to_vec(),
            estimator: EstimatorMode::Auto,
            master_seed: 0,
            standardize: true,
            burn_in: DEFAULT_BURN_IN,
            keep_replicates: false,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("at least one bootstrap replicate is required".into()));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(Error::InvalidParameter(format!("significance level {a} outside (0, 1)")));
        }
        Ok(())
    }
}

/// Bootstrap outcome for one statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub outcome: TestOutcome,
    /// Scaled replicate statistics in replicate order, failed replicates removed.
    pub replicate_stats: Vec<f64>,
    /// Indices of replicates that failed and were dropped.
    pub failed: Vec<usize>,
}

/// Residuals of both fits over their common post-presample window.
pub fn aligned_residuals(fit1: &FitResult, fit2: &FitResult) -> Result<PairedResiduals> {
    if fit1.n_obs() != fit2.n_obs() {
        return Err(Error::Dimension(format!("series have {} and {} observations", fit1.n_obs(), fit2.n_obs())));
    }
    let start = fit1.presample.max(fit2.presample);
    align(&fit1.residuals, &fit2.residuals, start)
}

fn align(r1: &MultiSeries, r2: &MultiSeries, start: usize) -> Result<PairedResiduals> {
    PairedResiduals::new(r1.slice_rows(start, r1.nrows()), r2.slice_rows(start, r2.nrows()))
}

/// Residual pool used for resampling: effective residuals, centered, and for
/// CCC-GARCH optionally whitened to identity covariance.
pub fn standardize_residuals(fit: &FitResult, standardize: bool) -> Result<MultiSeries> {
    let mut eta = fit.effective_residuals();
    let mean = eta.column_means();
    for t in 0..eta.nrows() {
        for (v, m) in eta.row_mut(t).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    if !(standardize && fit.spec == ModelSpec::CccGarch) {
        return Ok(eta);
    }
    let d = eta.ncols();
    let w = linalg::inv_sqrt_spd(&linalg::from_row_major(d, &eta.covariance()))?;
    let mut out = MultiSeries::zeros(eta.nrows(), d);
    for t in 0..eta.nrows() {
        let row = eta.row(t);
        for i in 0..d {
            out.set(t, i, (0..d).map(|j| w[(i, j)] * row[j]).sum());
        }
    }
    Ok(out)
}

/// `len` rows drawn with replacement from `pool`.
pub fn resample_innovations<R: Rng>(pool: &MultiSeries, len: usize, rng: &mut R) -> MultiSeries {
    let mut out = MultiSeries::zeros(len, pool.ncols());
    for t in 0..len {
        let src = rng.random_range(0..pool.nrows());
        out.row_mut(t).copy_from_slice(pool.row(src));
    }
    out
}

/// `theta + mean influence`, pulled back into the admissible region for CCC-GARCH.
pub fn one_step_update(spec: &ModelSpec, theta: &[f64], mean_influence: &[f64]) -> Result<Vec<f64>> {
    let updated: Vec<f64> = theta.iter().zip(mean_influence).map(|(t, d)| t + d).collect();
    if updated.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: 0, col: 0 });
    }
    match spec {
        ModelSpec::Var { .. } => Ok(updated),
        ModelSpec::CccGarch => Ok(CccParams::from_slice(&updated)?.project_feasible().to_vec()),
    }
}

/// Re-estimates `fit`'s parameters on a bootstrap path.
pub fn bootstrap_estimate(fit: &FitResult, data: &MultiSeries, mode: EstimatorMode, seed: u64) -> Result<Vec<f64>> {
    match mode.resolve(&fit.spec) {
        EstimatorMode::OneStep => one_step_update(&fit.spec, &fit.theta, &fit.mean_influence(data)?),
        _ => Ok(fit.spec.fit(data, seed)?.theta),
    }
}

/// One bootstrap path for `fit`: `burn_in + n` resampled innovations pushed
/// through the fitted dynamics, keeping the last `n` rows.
pub fn bootstrap_path<R: Rng>(fit: &FitResult, pool: &MultiSeries, burn_in: usize, rng: &mut R) -> Result<MultiSeries> {
    let innov = resample_innovations(pool, burn_in + fit.n_obs(), rng);
    simulate_fit(fit, &innov, SimulateOptions { burn_in, allow_explosive: false })
}

fn replicate_residuals(fit: &FitResult, pool: &MultiSeries, cfg: &BootstrapConfig, b: usize, s: u64) -> Result<MultiSeries> {
    let mut rng = rng::stream(cfg.master_seed, Purpose::Bootstrap, b as u64, s);
    let path = bootstrap_path(fit, pool, cfg.burn_in, &mut rng)?;
    let seed = rng::derive_seed(cfg.master_seed, Purpose::MultiStart, 2 * b as u64 + s);
    let theta = bootstrap_estimate(fit, &path, cfg.estimator, seed)?;
    let res = residuals_with(&fit.spec, &theta, &path)?;
    res.check_finite()?;
    Ok(res)
}

/// Smallest-index `ceil((1 - alpha)(B + 1))`-th order statistic of the
/// sorted replicates, or `None` when that index exceeds `B`.
pub fn critical_value(sorted: &[f64], alpha: f64) -> Option<f64> {
    let b = sorted.len();
    let upper = ((alpha * (b + 1) as f64) + 1e-9).floor() as usize;
    let k = (b + 1).saturating_sub(upper);
    if k == 0 || k > b {
        None
    } else {
        Some(sorted[k - 1])
    }
}

/// `(1 + #{replicates >= observed}) / (B + 1)`.
pub fn bootstrap_p_value(replicates: &[f64], observed: f64) -> f64 {
    let exceed = replicates.iter().filter(|&&r| r >= observed).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// Splits replicate runs into per-statistic values and failed indices,
/// aborting when failures exceed the budget.
fn collect_replicates(runs: Vec<Result<Vec<f64>>>, n_stats: usize) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let total = runs.len();
    let mut failed = Vec::new();
    let mut first_error = None;
    let mut per_stat = vec![Vec::with_capacity(total); n_stats];
    for (b, run) in runs.into_iter().enumerate() {
        match run {
            Ok(values) => {
                for (acc, v) in per_stat.iter_mut().zip(values) {
                    acc.push(v);
                }
            }
            Err(e) => {
                failed.push(b);
                first_error.get_or_insert(Error::Replicate { replicate: b, source: Box::new(e) });
            }
        }
    }
    if failed.len() as f64 > FAILURE_BUDGET * total as f64 {
        return Err(Error::FailureBudget {
            failed: failed.len(),
            total,
            budget_pct: 100.0 * FAILURE_BUDGET,
            first: first_error.map(|e| e.to_string()).unwrap_or_default(),
        });
    }
    Ok((per_stat, failed))
}

/// Runs the residual bootstrap for several statistics at once, sharing every
/// bootstrap path and Gram matrix across them.
pub fn bootstrap_tests(
    fit1: &FitResult,
    fit2: &FitResult,
    stats: &[LagConfig],
    kernel_k: &KernelSpec,
    kernel_l: &KernelSpec,
    cfg: &BootstrapConfig,
) -> Result<Vec<BootstrapResult>> {
    cfg.validate()?;
    kernel_k.validate()?;
    kernel_l.validate()?;
    let observed_res = aligned_residuals(fit1, fit2)?;
    let n = observed_res.n();
    for s in stats {
        s.check_feasible(n)?;
    }
    let grams = LaggedGrams::new(&observed_res, kernel_k, kernel_l)?;
    let observed: Vec<f64> = stats.iter().map(|s| grams.stat(s)).collect::<Result<_>>()?;
    drop(grams);

    let pool1 = standardize_residuals(fit1, cfg.standardize)?;
    let pool2 = standardize_residuals(fit2, cfg.standardize)?;
    let start = fit1.presample.max(fit2.presample);

    let runs: Vec<Result<Vec<f64>>> = parallel::map_indexed(cfg.replicates, |b| {
        let r1 = replicate_residuals(fit1, &pool1, cfg, b, 0)?;
        let r2 = replicate_residuals(fit2, &pool2, cfg, b, 1)?;
        let g = LaggedGrams::new(&align(&r1, &r2, start)?, kernel_k, kernel_l)?;
        stats.iter().map(|s| g.scaled(s)).collect()
    });

    let (per_stat, failed) = collect_replicates(runs, stats.len())?;

    Ok(stats
        .iter()
        .zip(observed)
        .zip(per_stat)
        .map(|((s, raw), reps)| {
            let obs = scaled_stat(raw, n);
            let mut sorted = reps.clone();
            sorted.sort_by(f64::total_cmp);
            let critical_values =
                cfg.alphas.iter().map(|&alpha| CriticalValue { alpha, value: critical_value(&sorted, alpha) }).collect();
            let (lag, max_lag, n_effective) = match *s {
                LagConfig::Single { lag, .. } => (Some(lag), None, n - lag),
                LagConfig::Joint { max_lag, .. } => (None, Some(max_lag), n - max_lag),
            };
            let outcome = TestOutcome {
                test: s.label(),
                statistic: raw,
                scaled: obs,
                p_value: bootstrap_p_value(&reps, obs),
                critical_values,
                reference: Reference::Bootstrap { replicates: reps.len(), failed: failed.len() },
                n,
                n_effective,
                lag,
                max_lag,
                direction: Some(s.direction()),
                bandwidth: None,
                replicates: cfg.keep_replicates.then(|| reps.clone()),
            };
            BootstrapResult { outcome, replicate_stats: reps, failed: failed.clone() }
        })
        .collect())
}

/// Residual bootstrap for a single statistic.
pub fn bootstrap_test(
    fit1: &FitResult,
    fit2: &FitResult,
    stat: LagConfig,
    kernel_k: &KernelSpec,
    kernel_l: &KernelSpec,
    cfg: &BootstrapConfig,
) -> Result<BootstrapResult> {
    Ok(bootstrap_tests(fit1, fit2, &[stat], kernel_k, kernel_l, cfg)?.remove(0))
}

#[cfg(test)]
mod tests;
