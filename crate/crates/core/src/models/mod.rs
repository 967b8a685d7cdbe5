//! Working models for each series: fitting, residual extraction, forward
//! simulation from innovations, and per-observation influence values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MultiSeries;

pub mod garch;
pub mod var;

pub use crate::linalg::psd_sqrt;
pub use garch::{fit_ccc_garch, CccParams, QmleOptions};
pub use var::fit_var;

/// Burn-in used when simulating stationary paths.
pub const DEFAULT_BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Vector autoregression of the given order, fitted by least squares.
    Var { order: usize, intercept: bool },
    /// Bivariate constant-conditional-correlation GARCH(1,1), fitted by Gaussian QMLE.
    CccGarch,
}

impl ModelSpec {
    pub fn var(order: usize, intercept: bool) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("VAR order must be at least 1".into()));
        }
        Ok(Self::Var { order, intercept })
    }

    /// Number of leading observations without a residual.
    pub fn presample(&self) -> usize {
        match *self {
            Self::Var { order, .. } => order,
            Self::CccGarch => 0,
        }
    }

    /// Number of parameters for a `d`-dimensional series.
    pub fn n_params(&self, d: usize) -> usize {
        match *self {
            Self::Var { order, intercept } => d * (usize::from(intercept) + d * order),
            Self::CccGarch => 7,
        }
    }

    /// Fits the model to `data`. `seed` drives the QMLE multi-starts and is ignored for VAR.
    pub fn fit(&self, data: &MultiSeries, seed: u64) -> Result<FitResult> {
        match *self {
            Self::Var { order, intercept } => fit_var(data, order, intercept),
            Self::CccGarch => fit_ccc_garch(data, &QmleOptions { seed, ..QmleOptions::default() }),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Var { order, intercept: false } => write!(f, "var:{order}"),
            Self::Var { order, intercept: true } => write!(f, "var:{order}:intercept"),
            Self::CccGarch => f.write_str("ccc-garch"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// Parses `var:p`, `var:p:intercept` or `ccc-garch`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["ccc-garch"] | ["ccc_garch"] => Ok(Self::CccGarch),
            ["var", p] | ["var", p, _] => {
                let order = p
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidParameter(format!("bad VAR order in '{s}'")))?;
                let intercept = match parts.get(2) {
                    None => false,
                    Some(&"intercept") | Some(&"1") | Some(&"true") => true,
                    Some(&"nointercept") | Some(&"0") | Some(&"false") => false,
                    Some(other) => {
                        return Err(Error::InvalidParameter(format!("bad intercept flag '{other}'")));
                    }
                };
                Self::var(order, intercept)
            }
            _ => Err(Error::InvalidParameter(format!("unknown model '{s}'"))),
        }
    }
}

/// Presample state a simulation is conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitState {
    /// The `p` observations preceding the first simulated row, oldest first.
    Var { presample: MultiSeries },
    /// Conditional variances of the first simulated row.
    CccGarch { variances: [f64; 2] },
}

/// Estimator-specific quantities the influence function needs.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum InfluenceBasis {
    /// Inverse regressor second-moment matrix (k x k, row-major).
    Var { gamma_inv: Vec<f64> },
    /// Inverse outer-product-of-scores information (7 x 7, row-major).
    CccGarch { info_inv: Vec<f64> },
}

/// A fitted model.
///
/// Parameter layout: VAR stacks the `d x k` matrix `[c | A_1 | ... | A_p]`
/// row-major; CCC-GARCH uses `(omega1, alpha1, beta1, omega2, alpha2, beta2, rho)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub spec: ModelSpec,
    pub theta: Vec<f64>,
    /// One row per observation; the first `presample` rows are zero and excluded downstream.
    pub residuals: MultiSeries,
    pub presample: usize,
    /// Per-observation influence values, `n x n_params`; presample rows are zero.
    pub influence: MultiSeries,
    pub loglik: Option<f64>,
    pub init: InitState,
    pub(crate) basis: InfluenceBasis,
}

impl FitResult {
    pub fn n_obs(&self) -> usize {
        self.residuals.nrows()
    }

    pub fn dim(&self) -> usize {
        self.residuals.ncols()
    }

    /// Residual rows after the presample.
    pub fn effective_residuals(&self) -> MultiSeries {
        self.residuals.slice_rows(self.presample, self.residuals.nrows())
    }

    /// Residuals of `data` under this fit's parameters.
    pub fn residuals_for(&self, data: &MultiSeries) -> Result<MultiSeries> {
        residuals_with(&self.spec, &self.theta, data)
    }

    /// Averaged influence values on `data`, evaluated at this fit's parameters.
    pub fn mean_influence(&self, data: &MultiSeries) -> Result<Vec<f64>> {
        match (&self.spec, &self.basis) {
            (ModelSpec::Var { order, intercept }, InfluenceBasis::Var { gamma_inv }) => {
                var::mean_influence(&self.theta, data, *order, *intercept, gamma_inv)
            }
            (ModelSpec::CccGarch, InfluenceBasis::CccGarch { info_inv }) => {
                garch::mean_influence(&CccParams::from_slice(&self.theta)?, data, info_inv)
            }
            _ => unreachable!("influence basis always matches the model kind"),
        }
    }

    /// The presample state for this fit's own data, used to replay it.
    pub fn init_state(&self) -> &InitState {
        &self.init
    }
}

/// Residuals of `data` under parameters `theta`.
pub fn residuals_with(spec: &ModelSpec, theta: &[f64], data: &MultiSeries) -> Result<MultiSeries> {
    if theta.len() != spec.n_params(data.ncols()) {
        return Err(Error::Dimension(format!(
            "{spec} on {} columns needs {} parameters, got {}",
            data.ncols(),
            spec.n_params(data.ncols()),
            theta.len()
        )));
    }
    match *spec {
        ModelSpec::Var { order, intercept } => var::residuals(theta, data, order, intercept),
        ModelSpec::CccGarch => {
            let p = CccParams::from_slice(theta)?;
            garch::residuals(&p, data, garch::initial_variances(data)?)
        }
    }
}

/// Residuals of `data` under the fitted model.
pub fn residuals(fit: &FitResult, data: &MultiSeries) -> Result<MultiSeries> {
    if data.ncols() != fit.dim() {
        return Err(Error::Dimension(format!("fit is {}-dimensional, data has {} columns", fit.dim(), data.ncols())));
    }
    fit.residuals_for(data)
}

/// Options controlling forward simulation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimulateOptions {
    /// Leading simulated rows to discard.
    pub burn_in: usize,
    /// Permit non-stationary GARCH parameters.
    pub allow_explosive: bool,
}

/// Drives the model forward with `innovations`, starting from `init`.
///
/// Returns one row per innovation after dropping the first `opts.burn_in`.
pub fn simulate(
    spec: &ModelSpec,
    theta: &[f64],
    innovations: &MultiSeries,
    init: &InitState,
    opts: SimulateOptions,
) -> Result<MultiSeries> {
    innovations.check_finite()?;
    if opts.burn_in > innovations.nrows() {
        return Err(Error::InsufficientData { needed: opts.burn_in, got: innovations.nrows() });
    }
    if theta.len() != spec.n_params(innovations.ncols()) {
        return Err(Error::Dimension(format!("{spec} needs {} parameters, got {}", spec.n_params(innovations.ncols()), theta.len())));
    }
    match (spec, init) {
        (ModelSpec::Var { order, intercept }, InitState::Var { presample }) => {
            var::simulate(theta, *order, *intercept, innovations, presample, opts.burn_in)
        }
        (ModelSpec::CccGarch, InitState::CccGarch { variances }) => {
            let p = CccParams::from_slice(theta)?;
            if !opts.allow_explosive {
                p.check_stationary()?;
            }
            garch::simulate(&p, innovations, *variances, opts.burn_in)
        }
        _ => Err(Error::InvalidParameter(format!("initial state does not match model {spec}"))),
    }
}

/// Simulation from a fitted model, conditioned on its recorded presample state.
pub fn simulate_fit(fit: &FitResult, innovations: &MultiSeries, opts: SimulateOptions) -> Result<MultiSeries> {
    simulate(&fit.spec, &fit.theta, innovations, &fit.init, opts)
}
