//! Simulation designs for finite-sample studies: six error-generating
//! processes, a VAR(1) and a CCC-GARCH(1,1) data-generating process, and a
//! Monte Carlo harness measuring rejection frequencies.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{garch, simulate, CccParams, InitState, ModelSpec, SimulateOptions};
use crate::series::MultiSeries;

mod montecarlo;

pub use montecarlo::{run_monte_carlo, run_replications, summarize, Dgp, McConfig, McRow, McSummary, ReplicationOutcome, TestSpec};

/// One of the six error-generating processes.
///
/// The auxiliary vector is `u = (u1, u2, u3', u4')'` with `u3, u4` bivariate,
/// drawn from `N(0, Omega)` where `(u1, u2)` has correlation `rho1`, `u3` and
/// `u4` have internal correlations `rho2` and `rho3`, and every entry of the
/// `u3`-`u4` cross block equals `rho4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgpSpec {
    pub id: u8,
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub rho4: f64,
}

impl EgpSpec {
    pub fn new(id: u8) -> Result<Self> {
        if !(1..=6).contains(&id) {
            return Err(Error::InvalidParameter(format!("EGP id must be 1..=6, got {id}")));
        }
        Ok(Self {
            id,
            rho1: if id >= 5 { 0.8 } else { 0.0 },
            rho2: 0.5,
            rho3: 0.75,
            rho4: if id == 2 { 0.3 } else { 0.0 },
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.id) {
            return Err(Error::InvalidParameter(format!("EGP id must be 1..=6, got {}", self.id)));
        }
        if [self.rho1, self.rho2, self.rho3, self.rho4].iter().any(|r| !(r.abs() < 1.0)) {
            return Err(Error::InvalidParameter("EGP correlations must lie in (-1, 1)".into()));
        }
        Ok(())
    }

    /// The 6x6 covariance of `u`.
    pub fn omega(&self) -> DMatrix<f64> {
        let mut o = DMatrix::identity(6, 6);
        o[(0, 1)] = self.rho1;
        o[(1, 0)] = self.rho1;
        o[(2, 3)] = self.rho2;
        o[(3, 2)] = self.rho2;
        o[(4, 5)] = self.rho3;
        o[(5, 4)] = self.rho3;
        for i in 2..4 {
            for j in 4..6 {
                o[(i, j)] = self.rho4;
                o[(j, i)] = self.rho4;
            }
        }
        o
    }

    /// Extra auxiliary rows needed past the sample end.
    fn lead(&self) -> usize {
        if self.id == 4 {
            3
        } else {
            0
        }
    }
}

/// Draws `n` paired innovations from the EGP.
pub fn egp_innovations<R: Rng>(spec: &EgpSpec, n: usize, rng: &mut R) -> Result<(MultiSeries, MultiSeries)> {
    spec.validate()?;
    let root = crate::linalg::psd_sqrt(&spec.omega())?;
    let total = n + spec.lead();
    let mut u = vec![[0.0; 6]; total];
    for row in u.iter_mut() {
        let z: [f64; 6] = std::array::from_fn(|_| rng.sample(StandardNormal));
        for (i, v) in row.iter_mut().enumerate() {
            *v = (0..6).map(|j| root[(i, j)] * z[j]).sum();
        }
    }
    let mut eta1 = MultiSeries::zeros(n, 2);
    let mut eta2 = MultiSeries::zeros(n, 2);
    let vol = |x: f64| (x * x + 1.0) / 6f64.sqrt();
    for t in 0..n {
        let ut = &u[t];
        let (f1, f2) = match spec.id {
            1 | 2 => (1.0, 1.0),
            3 => (vol(ut[0]), ut[0].abs()),
            4 => (vol(ut[0]), u[t + 3][0].abs()),
            5 => (vol(ut[0]), ut[1].abs()),
            _ => (ut[0], ut[1]),
        };
        for j in 0..2 {
            eta1.set(t, j, f1 * ut[2 + j]);
            eta2.set(t, j, f2 * ut[4 + j]);
        }
    }
    Ok((eta1, eta2))
}

/// Coefficient matrices of the VAR(1) design, row-major.
pub const MODEL_5_1_A1: [f64; 4] = [0.4, 0.1, -1.0, 0.5];
pub const MODEL_5_1_A2: [f64; 4] = [-1.5, 1.2, -0.9, 0.5];

/// Parameters of the CCC-GARCH(1,1) design for each series.
pub const MODEL_5_2_SERIES1: CccParams = CccParams { omega: [0.2, 0.2], alpha: [0.1, 0.1], beta: [0.5, 0.5], rho: 0.5 };
pub const MODEL_5_2_SERIES2: CccParams = CccParams { omega: [0.3, 0.3], alpha: [0.2, 0.2], beta: [0.4, 0.4], rho: 0.6 };

/// Two VAR(1) series driven by `eta1`, `eta2`, started at zero; the first
/// `burn_in` rows are discarded.
pub fn gen_model_5_1(eta1: &MultiSeries, eta2: &MultiSeries, burn_in: usize) -> Result<(MultiSeries, MultiSeries)> {
    let spec = ModelSpec::var(1, false)?;
    let init = InitState::Var { presample: MultiSeries::zeros(1, 2) };
    let opts = SimulateOptions { burn_in, allow_explosive: false };
    Ok((simulate(&spec, &MODEL_5_1_A1, eta1, &init, opts)?, simulate(&spec, &MODEL_5_1_A2, eta2, &init, opts)?))
}

/// Two CCC-GARCH(1,1) series driven by `eta1`, `eta2`, started at the
/// unconditional variances; the first `burn_in` rows are discarded.
pub fn gen_model_5_2(eta1: &MultiSeries, eta2: &MultiSeries, burn_in: usize) -> Result<(MultiSeries, MultiSeries)> {
    let run = |p: &CccParams, eta| garch::simulate(p, eta, p.unconditional_variances(), burn_in);
    Ok((run(&MODEL_5_2_SERIES1, eta1)?, run(&MODEL_5_2_SERIES2, eta2)?))
}

#[cfg(test)]
mod tests;
