use thiserror::Error;

/// Errors produced by the statistics, model and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("insufficient observations: need more than {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("lag {lag} infeasible for sample size {n}")]
    LagTooLarge { lag: usize, n: usize },
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("optimizer failed to converge: {0}")]
    NonConvergence(String),
    #[error("estimate on the stationarity boundary (alpha + beta = {persistence})")]
    Boundary { persistence: f64 },
    #[error("explosive parameters: {0}")]
    Explosive(String),
    #[error("bootstrap replicate {replicate} failed: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{failed} of {total} replicates failed, over the {budget_pct}% budget; first failure: {first}")]
    FailureBudget {
        failed: usize,
        total: usize,
        budget_pct: f64,
        first: String,
    },
}

impl Error {
    /// True for errors that come from numerical trouble rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular(_)
            | Error::NotPsd { .. }
            | Error::NonConvergence(_)
            | Error::Boundary { .. }
            | Error::Explosive(_)
            | Error::FailureBudget { .. }
            | Error::Degenerate(_) => true,
            Error::Replicate { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
