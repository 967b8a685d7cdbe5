use serde::{Deserialize, Serialize};

use crate::hsic::Direction;

/// Reference distribution a test's p-value comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// Residual bootstrap with `replicates` usable draws (`failed` dropped).
    Bootstrap { replicates: usize, failed: usize },
    ChiSquare { df: usize },
    StandardNormal,
}

/// Critical value at one significance level. `None` when the level is too
/// small for the number of bootstrap replicates to resolve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValue {
    pub alpha: f64,
    pub value: Option<f64>,
}

/// Result of one hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    /// Short name, e.g. `S1(0)`, `J2(3)`, `G1(6)`, `W2(h1)`.
    pub test: String,
    /// Statistic before scaling (equal to `scaled` for the cross-correlation tests).
    pub statistic: f64,
    /// The quantity compared to the reference distribution.
    pub scaled: f64,
    pub p_value: f64,
    pub critical_values: Vec<CriticalValue>,
    pub reference: Reference,
    /// Residual sample size used for scaling.
    pub n: usize,
    /// Points entering the statistic after lag alignment (`n - m` for single-lag HSIC).
    pub n_effective: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lag: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_lag: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<f64>>,
}

impl TestOutcome {
    /// Rejection at level `alpha`, decided by the p-value.
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// Levels reported for the asymptotic tests.
pub const DEFAULT_ALPHAS: [f64; 3] = [0.01, 0.05, 0.10];
