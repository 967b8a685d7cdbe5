pub mod error;
pub mod hsic;
pub mod kernels;
mod linalg;
pub mod bootstrap;
pub mod crosscorr;
pub mod models;
pub mod outcome;
pub mod parallel;
pub mod rng;
pub mod series;
pub mod simlab;

pub use error::{Error, Result};
pub use series::MultiSeries;
