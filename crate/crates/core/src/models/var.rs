//! Vector autoregression by multivariate least squares.

use nalgebra::DMatrix;

use super::{FitResult, InfluenceBasis, InitState, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg;
use crate::series::MultiSeries;

/// Regressor vector `[1?, y_{t-1}, ..., y_{t-p}]` for observation `t >= p`.
fn regressors(data: &MultiSeries, t: usize, order: usize, intercept: bool, out: &mut Vec<f64>) {
    out.clear();
    if intercept {
        out.push(1.0);
    }
    for lag in 1..=order {
        out.extend_from_slice(data.row(t - lag));
    }
}

fn check_shape(data: &MultiSeries, order: usize, intercept: bool) -> Result<usize> {
    let (n, d) = (data.nrows(), data.ncols());
    let k = usize::from(intercept) + d * order;
    let needed = (d * order + usize::from(intercept) + 1).max(order + k);
    if n <= needed {
        return Err(Error::InsufficientData { needed, got: n });
    }
    data.check_finite()?;
    Ok(k)
}

/// Least-squares fit of a VAR(`order`) model.
pub fn fit_var(data: &MultiSeries, order: usize, intercept: bool) -> Result<FitResult> {
    if order == 0 {
        return Err(Error::InvalidParameter("VAR order must be at least 1".into()));
    }
    let k = check_shape(data, order, intercept)?;
    let (n, d) = (data.nrows(), data.ncols());
    let n_eff = n - order;

    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut ytx = DMatrix::<f64>::zeros(d, k);
    let mut x = Vec::with_capacity(k);
    for t in order..n {
        regressors(data, t, order, intercept, &mut x);
        let y = data.row(t);
        for a in 0..k {
            for b in a..k {
                xtx[(a, b)] += x[a] * x[b];
            }
            for i in 0..d {
                ytx[(i, a)] += y[i] * x[a];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }
    let gamma = &xtx / n_eff as f64;
    let gamma_inv = linalg::inverse_spd(&gamma)
        .map_err(|e| Error::Singular(format!("rank-deficient VAR design: {e}")))?;
    let coef = &ytx * &gamma_inv / n_eff as f64;

    let mut theta = Vec::with_capacity(d * k);
    for i in 0..d {
        for j in 0..k {
            theta.push(coef[(i, j)]);
        }
    }
    let gamma_inv: Vec<f64> = (0..k * k).map(|idx| gamma_inv[(idx / k, idx % k)]).collect();
    let residuals = residuals(&theta, data, order, intercept)?;
    let influence = influence(&residuals, data, order, intercept, &gamma_inv);

    Ok(FitResult {
        spec: ModelSpec::Var { order, intercept },
        theta,
        residuals,
        presample: order,
        influence,
        loglik: None,
        init: InitState::Var { presample: data.slice_rows(0, order) },
        basis: InfluenceBasis::Var { gamma_inv },
    })
}

/// `y_t - B x_t` for `t >= order`; the first `order` rows are zero.
pub(crate) fn residuals(theta: &[f64], data: &MultiSeries, order: usize, intercept: bool) -> Result<MultiSeries> {
    let k = check_shape(data, order, intercept)?;
    let (n, d) = (data.nrows(), data.ncols());
    let mut out = MultiSeries::zeros(n, d);
    let mut x = Vec::with_capacity(k);
    for t in order..n {
        regressors(data, t, order, intercept, &mut x);
        let y = data.row(t);
        let row = out.row_mut(t);
        for i in 0..d {
            let fitted: f64 = theta[i * k..(i + 1) * k].iter().zip(&x).map(|(b, xv)| b * xv).sum();
            row[i] = y[i] - fitted;
        }
    }
    Ok(out)
}

/// `pi_t = vec((Gamma^-1 x_t) eta_t')` in the row-major parameter layout:
/// entry `i * k + j` is `eta_{t,i} (Gamma^-1 x_t)_j`.
fn influence(res: &MultiSeries, data: &MultiSeries, order: usize, intercept: bool, gamma_inv: &[f64]) -> MultiSeries {
    let (n, d) = (data.nrows(), data.ncols());
    let k = usize::from(intercept) + d * order;
    let mut out = MultiSeries::zeros(n, d * k);
    let mut x = Vec::with_capacity(k);
    let mut gx = vec![0.0; k];
    for t in order..n {
        regressors(data, t, order, intercept, &mut x);
        for (a, g) in gx.iter_mut().enumerate() {
            *g = gamma_inv[a * k..(a + 1) * k].iter().zip(&x).map(|(p, q)| p * q).sum();
        }
        let eta = res.row(t);
        let row = out.row_mut(t);
        for i in 0..d {
            for j in 0..k {
                row[i * k + j] = eta[i] * gx[j];
            }
        }
    }
    out
}

pub(crate) fn mean_influence(
    theta: &[f64],
    data: &MultiSeries,
    order: usize,
    intercept: bool,
    gamma_inv: &[f64],
) -> Result<Vec<f64>> {
    let res = residuals(theta, data, order, intercept)?;
    let inf = influence(&res, data, order, intercept, gamma_inv);
    let mut mean = inf.column_means();
    // presample rows are zero; average over the rows that carry influence
    let scale = data.nrows() as f64 / (data.nrows() - order) as f64;
    mean.iter_mut().for_each(|m| *m *= scale);
    Ok(mean)
}

pub(crate) fn simulate(
    theta: &[f64],
    order: usize,
    intercept: bool,
    innovations: &MultiSeries,
    presample: &MultiSeries,
    burn_in: usize,
) -> Result<MultiSeries> {
    let d = innovations.ncols();
    if presample.nrows() != order || presample.ncols() != d {
        return Err(Error::Dimension(format!(
            "VAR({order}) needs a {order}x{d} presample, got {}x{}",
            presample.nrows(),
            presample.ncols()
        )));
    }
    let k = usize::from(intercept) + d * order;
    let total = innovations.nrows();
    // history holds the presample followed by every simulated row
    let mut hist = Vec::with_capacity((order + total) * d);
    hist.extend_from_slice(presample.as_slice());
    for t in 0..total {
        let base = (order + t) * d;
        for i in 0..d {
            let b = &theta[i * k..(i + 1) * k];
            let mut y = if intercept { b[0] } else { 0.0 };
            let off = usize::from(intercept);
            for lag in 1..=order {
                let prev = &hist[base - lag * d..base - (lag - 1) * d];
                let coefs = &b[off + (lag - 1) * d..off + lag * d];
                y += coefs.iter().zip(prev).map(|(c, v)| c * v).sum::<f64>();
            }
            hist.push(y + innovations.get(t, i));
        }
    }
    let start = (order + burn_in) * d;
    MultiSeries::new(total - burn_in, d, hist[start..].to_vec())
}
