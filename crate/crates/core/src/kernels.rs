//! Kernel functions on `R^d` and Gram-matrix construction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel;
use crate::series::MultiSeries;

/// A kernel family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-|u-v|^2 / (2 sigma^2))`
    Gaussian { sigma: f64 },
    /// `exp(-|u-v| / sigma)`
    Laplace { sigma: f64 },
    /// `(beta + |u-v|)^(-alpha)`
    InverseMultiquadric { alpha: f64, beta: f64 },
    /// `(|u|^(2h) + |v|^(2h) - |u-v|^(2h)) / 2`
    Fbm { hurst: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Gaussian { sigma: 1.0 }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {v}")))
    }
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(Self::Gaussian { sigma })
    }

    pub fn laplace(sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(Self::Laplace { sigma })
    }

    pub fn inverse_multiquadric(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Self::InverseMultiquadric { alpha, beta })
    }

    pub fn fbm(hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidParameter(format!("hurst must lie in (0, 1), got {hurst}")));
        }
        Ok(Self::Fbm { hurst })
    }

    /// Re-checks parameter constraints (useful after deserialization).
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Gaussian { sigma } => Self::gaussian(sigma).map(drop),
            Self::Laplace { sigma } => Self::laplace(sigma).map(drop),
            Self::InverseMultiquadric { alpha, beta } => Self::inverse_multiquadric(alpha, beta).map(drop),
            Self::Fbm { hurst } => Self::fbm(hurst).map(drop),
        }
    }

    /// Value on the diagonal, `k(u, u)`; `None` for fbm where it depends on `u`.
    pub fn diagonal(&self) -> Option<f64> {
        match *self {
            Self::Gaussian { .. } | Self::Laplace { .. } => Some(1.0),
            Self::InverseMultiquadric { alpha, beta } => Some(beta.powf(-alpha)),
            Self::Fbm { .. } => None,
        }
    }

    pub fn is_translation_invariant(&self) -> bool {
        !matches!(self, Self::Fbm { .. })
    }

    #[inline]
    fn eval_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        match *self {
            Self::Gaussian { sigma } => (-sq_dist(u, v) / (2.0 * sigma * sigma)).exp(),
            Self::Laplace { sigma } => (-sq_dist(u, v).sqrt() / sigma).exp(),
            Self::InverseMultiquadric { alpha, beta } => (beta + sq_dist(u, v).sqrt()).powf(-alpha),
            Self::Fbm { hurst } => {
                let nu = sq_norm(u).powf(hurst);
                let nv = sq_norm(v).powf(hurst);
                let nd = sq_dist(u, v).powf(hurst);
                0.5 * (nu + nv - nd)
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            Self::Laplace { sigma } => write!(f, "laplace:{sigma}"),
            Self::InverseMultiquadric { alpha, beta } => write!(f, "imq:{alpha}:{beta}"),
            Self::Fbm { hurst } => write!(f, "fbm:{hurst}"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Parses `gaussian:σ`, `laplace:σ`, `imq:α:β` or `fbm:h`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::InvalidParameter(format!("kernel '{s}' is missing a parameter")))?
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("kernel '{s}' has a non-numeric parameter")))
        };
        let arity = |k: usize| -> Result<()> {
            if parts.len() == k + 1 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("kernel '{s}' expects {k} parameter(s)")))
            }
        };
        match parts[0] {
            "gaussian" => {
                arity(1)?;
                Self::gaussian(num(1)?)
            }
            "laplace" => {
                arity(1)?;
                Self::laplace(num(1)?)
            }
            "imq" | "inverse_multiquadric" => {
                arity(2)?;
                Self::inverse_multiquadric(num(1)?, num(2)?)
            }
            "fbm" => {
                arity(1)?;
                Self::fbm(num(1)?)
            }
            other => Err(Error::InvalidParameter(format!("unknown kernel family '{other}'"))),
        }
    }
}

#[inline]
fn sq_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
fn sq_norm(u: &[f64]) -> f64 {
    u.iter().map(|a| a * a).sum()
}

/// Evaluates `k(u, v)`.
pub fn eval_kernel(spec: &KernelSpec, u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Dimension(format!("kernel arguments have lengths {} and {}", u.len(), v.len())));
    }
    if let Some(i) = u.iter().chain(v).position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { row: usize::from(i >= u.len()), col: i % u.len().max(1) });
    }
    Ok(spec.eval_unchecked(u, v))
}

/// Dense symmetric `N x N` matrix of kernel evaluations, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    /// Wraps an explicit matrix; used by tests and oracles. Rejects asymmetric input.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Dimension(format!("expected {} entries, got {}", n * n, values.len())));
        }
        for i in 0..n {
            for j in 0..i {
                if values[i * n + j] != values[j * n + i] {
                    return Err(Error::InvalidParameter(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Builds the Gram matrix over the rows of `points`. The upper triangle is
/// computed (row blocks in parallel when enabled) and then mirrored.
pub fn gram_matrix(spec: &KernelSpec, points: &MultiSeries) -> Result<GramMatrix> {
    let n = points.nrows();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 0, got: 0 });
    }
    points.check_finite()?;
    let mut values = vec![0.0; n * n];
    parallel::for_each_chunk_mut(&mut values, n, |i, row| {
        let u = points.row(i);
        for (j, out) in row.iter_mut().enumerate().skip(i) {
            *out = spec.eval_unchecked(u, points.row(j));
        }
    });
    for i in 0..n {
        for j in 0..i {
            values[i * n + j] = values[j * n + i];
        }
    }
    Ok(GramMatrix { n, values })
}

/// Median-heuristic bandwidth: median pairwise Euclidean distance over `sqrt(2)`.
/// Falls back to 1 when all points coincide.
pub fn median_heuristic_sigma(points: &MultiSeries) -> f64 {
    let n = points.nrows();
    let mut d: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(sq_dist(points.row(i), points.row(j)).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let med = if d.len() % 2 == 0 { 0.5 * (d[mid - 1] + d[mid]) } else { d[mid] };
    if med > 0.0 {
        med / std::f64::consts::SQRT_2
    } else {
        1.0
    }
}
