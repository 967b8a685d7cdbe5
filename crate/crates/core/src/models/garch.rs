//! Bivariate constant-conditional-correlation GARCH(1,1).
//!
//! Each component follows `v_t = omega + alpha * y_{t-1}^2 + beta * v_{t-1}`
//! and the conditional covariance is `[[v1, rho sqrt(v1 v2)], [., v2]]`.
//! Estimation maximizes the Gaussian quasi-log-likelihood
//! `-1/2 sum_t [log det V_t + y_t' V_t^-1 y_t]` with BFGS on an unconstrained
//! reparameterization, using analytic per-observation scores.

use nalgebra::DMatrix;
use rand::Rng;

use super::{FitResult, InfluenceBasis, InitState, ModelSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, inv_sqrt_2x2, sqrt_2x2};
use crate::rng::{self, Purpose};
use crate::series::MultiSeries;

/// Persistence at or above `1 - BOUNDARY_TOL` is reported as a boundary solution.
pub const BOUNDARY_TOL: f64 = 1e-6;

const N_PARAMS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CccParams {
    pub omega: [f64; 2],
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub rho: f64,
}

impl CccParams {
    pub fn from_slice(theta: &[f64]) -> Result<Self> {
        if theta.len() != N_PARAMS {
            return Err(Error::Dimension(format!("CCC-GARCH has 7 parameters, got {}", theta.len())));
        }
        Ok(Self {
            omega: [theta[0], theta[3]],
            alpha: [theta[1], theta[4]],
            beta: [theta[2], theta[5]],
            rho: theta[6],
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        vec![self.omega[0], self.alpha[0], self.beta[0], self.omega[1], self.alpha[1], self.beta[1], self.rho]
    }

    /// Positivity, `|rho| < 1` and `alpha + beta < 1` per component.
    pub fn check_stationary(&self) -> Result<()> {
        self.check_valid()?;
        for i in 0..2 {
            let s = self.alpha[i] + self.beta[i];
            if s >= 1.0 {
                return Err(Error::Explosive(format!("alpha + beta = {s} for component {}", i + 1)));
            }
        }
        Ok(())
    }

    fn check_valid(&self) -> Result<()> {
        let ok = self.omega.iter().all(|&w| w > 0.0 && w.is_finite())
            && self.alpha.iter().chain(&self.beta).all(|&a| a >= 0.0 && a.is_finite())
            && self.rho.abs() < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid CCC-GARCH parameters {self:?}")))
        }
    }

    pub fn unconditional_variances(&self) -> [f64; 2] {
        [
            self.omega[0] / (1.0 - self.alpha[0] - self.beta[0]),
            self.omega[1] / (1.0 - self.alpha[1] - self.beta[1]),
        ]
    }

    /// Nearest admissible parameter vector: variances floored, persistence capped
    /// at 0.999 and `|rho|` at 0.999.
    pub fn project_feasible(&self) -> Self {
        let mut p = *self;
        for i in 0..2 {
            p.omega[i] = p.omega[i].max(1e-8);
            p.alpha[i] = p.alpha[i].max(0.0);
            p.beta[i] = p.beta[i].max(0.0);
            let s = p.alpha[i] + p.beta[i];
            if s > 0.999 {
                p.alpha[i] *= 0.999 / s;
                p.beta[i] *= 0.999 / s;
            }
        }
        p.rho = p.rho.clamp(-0.999, 0.999);
        p
    }
}

/// Component sample variances, used as the first conditional variances.
pub fn initial_variances(data: &MultiSeries) -> Result<[f64; 2]> {
    if data.ncols() != 2 {
        return Err(Error::Dimension(format!("CCC-GARCH needs 2 columns, got {}", data.ncols())));
    }
    let cov = data.covariance();
    let v = [cov[0], cov[3]];
    let means = data.column_means();
    for i in 0..2 {
        let scale = means[i] * means[i] + v[i];
        if !(v[i] > 1e-14 * scale) || !v[i].is_finite() {
            return Err(Error::Degenerate(format!("column {} has zero variance", i + 1)));
        }
    }
    Ok(v)
}

/// Runs the variance recursion and calls `visit(t, v)` for every observation.
#[inline]
fn filter(p: &CccParams, data: &MultiSeries, v0: [f64; 2], mut visit: impl FnMut(usize, [f64; 2], &[f64])) {
    let mut v = v0;
    for t in 0..data.nrows() {
        let y = data.row(t);
        visit(t, v, y);
        for i in 0..2 {
            v[i] = p.omega[i] + p.alpha[i] * y[i] * y[i] + p.beta[i] * v[i];
        }
    }
}

#[inline]
fn loglik_term(v: [f64; 2], y: &[f64], rho: f64) -> f64 {
    let z1 = y[0] / v[0].sqrt();
    let z2 = y[1] / v[1].sqrt();
    let omr = 1.0 - rho * rho;
    let q = z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2;
    -0.5 * (v[0].ln() + v[1].ln() + omr.ln() + q / omr)
}

/// Quasi-log-likelihood and its gradient with respect to the natural parameters.
/// When `scores` is given, per-observation scores are written row by row.
fn loglik_grad(p: &CccParams, data: &MultiSeries, v0: [f64; 2], mut scores: Option<&mut MultiSeries>) -> (f64, [f64; 7]) {
    let rho = p.rho;
    let omr = 1.0 - rho * rho;
    let mut total = 0.0;
    let mut grad = [0.0; 7];
    // dv_t/d(omega, alpha, beta) per component; zero at t = 0 since v0 is fixed
    let mut dv = [[0.0f64; 3]; 2];
    let mut v = v0;
    let mut prev_y = [0.0f64; 2];
    for t in 0..data.nrows() {
        if t > 0 {
            for i in 0..2 {
                let old = v[i];
                v[i] = p.omega[i] + p.alpha[i] * prev_y[i] * prev_y[i] + p.beta[i] * old;
                let d = dv[i];
                dv[i] = [1.0 + p.beta[i] * d[0], prev_y[i] * prev_y[i] + p.beta[i] * d[1], old + p.beta[i] * d[2]];
            }
        }
        let y = data.row(t);
        let z1 = y[0] / v[0].sqrt();
        let z2 = y[1] / v[1].sqrt();
        let q = z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2;
        total += -0.5 * (v[0].ln() + v[1].ln() + omr.ln() + q / omr);
        let dl_dv1 = ((z1 * z1 - rho * z1 * z2) / omr - 1.0) / (2.0 * v[0]);
        let dl_dv2 = ((z2 * z2 - rho * z1 * z2) / omr - 1.0) / (2.0 * v[1]);
        let dl_drho = (rho + z1 * z2 - rho * q / omr) / omr;
        let s = [
            dl_dv1 * dv[0][0],
            dl_dv1 * dv[0][1],
            dl_dv1 * dv[0][2],
            dl_dv2 * dv[1][0],
            dl_dv2 * dv[1][1],
            dl_dv2 * dv[1][2],
            dl_drho,
        ];
        for (g, si) in grad.iter_mut().zip(&s) {
            *g += si;
        }
        if let Some(out) = scores.as_deref_mut() {
            out.row_mut(t).copy_from_slice(&s);
        }
        prev_y = [y[0], y[1]];
    }
    (total, grad)
}

/// Per-observation quasi-log-likelihood terms.
pub fn loglik_terms(p: &CccParams, data: &MultiSeries, v0: [f64; 2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(data.nrows());
    filter(p, data, v0, |_, v, y| out.push(loglik_term(v, y, p.rho)));
    out
}

/// Per-observation scores (n x 7) at `p`.
pub fn scores(p: &CccParams, data: &MultiSeries, v0: [f64; 2]) -> MultiSeries {
    let mut s = MultiSeries::zeros(data.nrows(), N_PARAMS);
    loglik_grad(p, data, v0, Some(&mut s));
    s
}

/// Standardized residuals `V_t^{-1/2} y_t` (symmetric inverse square root).
pub fn residuals(p: &CccParams, data: &MultiSeries, v0: [f64; 2]) -> Result<MultiSeries> {
    data.check_finite()?;
    let mut out = MultiSeries::zeros(data.nrows(), 2);
    let mut bad = None;
    filter(p, data, v0, |t, v, y| {
        let c = p.rho * (v[0] * v[1]).sqrt();
        if !(v[0] > 0.0 && v[1] > 0.0) {
            bad.get_or_insert(t);
            return;
        }
        let (a, b, d) = inv_sqrt_2x2(v[0], c, v[1]);
        out.set(t, 0, a * y[0] + b * y[1]);
        out.set(t, 1, b * y[0] + d * y[1]);
    });
    if let Some(t) = bad {
        return Err(Error::Degenerate(format!("non-positive conditional variance at t={t}")));
    }
    Ok(out)
}

/// Forward simulation `y_t = V_t^{1/2} eta_t`.
pub fn simulate(p: &CccParams, innovations: &MultiSeries, v0: [f64; 2], burn_in: usize) -> Result<MultiSeries> {
    if innovations.ncols() != 2 {
        return Err(Error::Dimension(format!("CCC-GARCH innovations need 2 columns, got {}", innovations.ncols())));
    }
    p.check_valid()?;
    let total = innovations.nrows();
    let mut out = MultiSeries::zeros(total - burn_in, 2);
    let mut v = v0;
    for t in 0..total {
        let c = p.rho * (v[0] * v[1]).sqrt();
        let (a, b, d) = sqrt_2x2(v[0], c, v[1]);
        let e = innovations.row(t);
        let y = [a * e[0] + b * e[1], b * e[0] + d * e[1]];
        if t >= burn_in {
            out.row_mut(t - burn_in).copy_from_slice(&y);
        }
        for i in 0..2 {
            v[i] = p.omega[i] + p.alpha[i] * y[i] * y[i] + p.beta[i] * v[i];
        }
        if !(v[0].is_finite() && v[1].is_finite()) {
            return Err(Error::Explosive(format!("conditional variance overflow at t={t}")));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmleOptions {
    pub seed: u64,
    /// Number of starting points; the first is the unperturbed moment estimate.
    pub starts: usize,
    pub max_iter: usize,
    /// Stop once the gradient of the mean objective drops below this.
    pub grad_tol: f64,
}

impl Default for QmleOptions {
    fn default() -> Self {
        Self { seed: 0, starts: 3, max_iter: 500, grad_tol: 1e-8 }
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained coordinates: `(ln omega, logit s, logit a)` per component with
/// `alpha = a s`, `beta = (1 - a) s`, then `atanh rho`.
fn to_natural(x: &[f64; 7]) -> (CccParams, [[f64; 7]; 7]) {
    let mut p = CccParams { omega: [0.0; 2], alpha: [0.0; 2], beta: [0.0; 2], rho: 0.0 };
    // jac[i][j] = d theta_i / d x_j
    let mut jac = [[0.0; 7]; 7];
    for c in 0..2 {
        let o = 3 * c;
        let w = x[o].exp();
        let s = logistic(x[o + 1]);
        let a = logistic(x[o + 2]);
        p.omega[c] = w;
        p.alpha[c] = a * s;
        p.beta[c] = (1.0 - a) * s;
        jac[o][o] = w;
        jac[o + 1][o + 1] = a * s * (1.0 - s);
        jac[o + 1][o + 2] = s * a * (1.0 - a);
        jac[o + 2][o + 1] = (1.0 - a) * s * (1.0 - s);
        jac[o + 2][o + 2] = -s * a * (1.0 - a);
    }
    p.rho = x[6].tanh();
    jac[6][6] = 1.0 - p.rho * p.rho;
    (p, jac)
}

fn to_unconstrained(p: &CccParams) -> [f64; 7] {
    let mut x = [0.0; 7];
    for c in 0..2 {
        let s = p.alpha[c] + p.beta[c];
        x[3 * c] = p.omega[c].ln();
        x[3 * c + 1] = logit(s);
        x[3 * c + 2] = logit(p.alpha[c] / s);
    }
    x[6] = p.rho.atanh();
    x
}

/// Mean negative quasi-log-likelihood and its gradient in unconstrained space.
fn objective(x: &[f64; 7], data: &MultiSeries, v0: [f64; 2]) -> (f64, [f64; 7]) {
    let (p, jac) = to_natural(x);
    let (ll, g) = loglik_grad(&p, data, v0, None);
    let n = data.nrows() as f64;
    let mut gx = [0.0; 7];
    for j in 0..7 {
        gx[j] = -(0..7).map(|i| jac[i][j] * g[i]).sum::<f64>() / n;
    }
    let f = -ll / n;
    if f.is_finite() && gx.iter().all(|v| v.is_finite()) {
        (f, gx)
    } else {
        (f64::INFINITY, gx)
    }
}

fn norm(v: &[f64; 7]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

struct Optimum {
    x: [f64; 7],
    f: f64,
    grad_norm: f64,
}

fn bfgs(x0: [f64; 7], data: &MultiSeries, v0: [f64; 2], opts: &QmleOptions) -> Optimum {
    let mut x = x0;
    let (mut f, mut g) = objective(&x, data, v0);
    let mut h = [[0.0; 7]; 7];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..opts.max_iter {
        if !f.is_finite() || norm(&g) < opts.grad_tol {
            break;
        }
        let mut d = [0.0; 7];
        for i in 0..7 {
            d[i] = -(0..7).map(|j| h[i][j] * g[j]).sum::<f64>();
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // lost descent; restart from steepest descent
            for i in 0..7 {
                for j in 0..7 {
                    h[i][j] = if i == j { 1.0 } else { 0.0 };
                }
                d[i] = -g[i];
            }
            slope = -norm(&g).powi(2);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut xn = x;
            for i in 0..7 {
                xn[i] += step * d[i];
            }
            let (fn_, gn) = objective(&xn, data, v0);
            if fn_ <= f + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            // near the optimum f stops resolving; accept a step that shrinks the gradient
            if fn_.is_finite() && fn_ <= f + 1e-14 * f.abs() && norm(&gn) < norm(&g) {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let mut s = [0.0; 7];
        let mut y = [0.0; 7];
        for i in 0..7 {
            s[i] = xn[i] - x[i];
            y[i] = gn[i] - g[i];
        }
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        if sy > 1e-16 {
            let mut hy = [0.0; 7];
            for i in 0..7 {
                hy[i] = (0..7).map(|j| h[i][j] * y[j]).sum();
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            let r = 1.0 / sy;
            for i in 0..7 {
                for j in 0..7 {
                    h[i][j] += (1.0 + yhy * r) * r * s[i] * s[j] - r * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        x = xn;
        f = fn_;
        g = gn;
    }
    Optimum { x, f, grad_norm: norm(&g) }
}

/// Moment-based starting values: persistence 0.9 split 1:8, intercept from the
/// sample variance, correlation from the sample correlation.
fn moment_start(data: &MultiSeries, v0: [f64; 2]) -> CccParams {
    let cov = data.covariance();
    let corr = (cov[1] / (cov[0] * cov[3]).sqrt()).clamp(-0.9, 0.9);
    CccParams {
        omega: [v0[0] * 0.1, v0[1] * 0.1],
        alpha: [0.1, 0.1],
        beta: [0.8, 0.8],
        rho: corr,
    }
}

/// Gaussian QMLE of the bivariate CCC-GARCH(1,1).
pub fn fit_ccc_garch(data: &MultiSeries, opts: &QmleOptions) -> Result<FitResult> {
    if data.ncols() != 2 {
        return Err(Error::Dimension(format!("CCC-GARCH needs 2 columns, got {}", data.ncols())));
    }
    if data.nrows() < 50 {
        return Err(Error::InsufficientData { needed: 49, got: data.nrows() });
    }
    data.check_finite()?;
    let v0 = initial_variances(data)?;
    let base = to_unconstrained(&moment_start(data, v0));

    let mut best: Option<Optimum> = None;
    for start in 0..opts.starts.max(1) {
        let mut x0 = base;
        if start > 0 {
            let mut rng = rng::stream(opts.seed, Purpose::MultiStart, start as u64, 0);
            for xi in x0.iter_mut() {
                *xi += rng.random_range(-0.5..0.5);
            }
        }
        let opt = bfgs(x0, data, v0, opts);
        if opt.f.is_finite() && best.as_ref().is_none_or(|b| opt.f < b.f) {
            best = Some(opt);
        }
    }
    let best = best.ok_or_else(|| Error::NonConvergence(format!("no finite likelihood from {} starts", opts.starts)))?;
    let (p, _) = to_natural(&best.x);
    for i in 0..2 {
        let persistence = p.alpha[i] + p.beta[i];
        if persistence >= 1.0 - BOUNDARY_TOL {
            return Err(Error::Boundary { persistence });
        }
    }
    if !(best.grad_norm < 1e-3) {
        return Err(Error::NonConvergence(format!("gradient norm {:e} after {} iterations", best.grad_norm, opts.max_iter)));
    }

    let n = data.nrows();
    let s = scores(&p, data, v0);
    let info_inv = outer_product_inverse(&s)?;
    let mut influence = MultiSeries::zeros(n, N_PARAMS);
    for t in 0..n {
        let st = s.row(t);
        let row = influence.row_mut(t);
        for i in 0..N_PARAMS {
            row[i] = (0..N_PARAMS).map(|j| info_inv[i * N_PARAMS + j] * st[j]).sum();
        }
    }
    let residuals = residuals(&p, data, v0)?;
    Ok(FitResult {
        spec: ModelSpec::CccGarch,
        theta: p.to_vec(),
        residuals,
        presample: 0,
        influence,
        loglik: Some(-best.f * n as f64),
        init: InitState::CccGarch { variances: v0 },
        basis: InfluenceBasis::CccGarch { info_inv },
    })
}

/// Inverse of the averaged outer product of scores.
fn outer_product_inverse(s: &MultiSeries) -> Result<Vec<f64>> {
    let k = s.ncols();
    let mut j = DMatrix::<f64>::zeros(k, k);
    for row in s.rows() {
        for a in 0..k {
            for b in a..k {
                j[(a, b)] += row[a] * row[b];
            }
        }
    }
    let n = s.nrows() as f64;
    for a in 0..k {
        for b in a..k {
            j[(a, b)] /= n;
            j[(b, a)] = j[(a, b)];
        }
    }
    let inv = linalg::inverse_spd(&j)?;
    Ok((0..k * k).map(|idx| inv[(idx / k, idx % k)]).collect())
}

/// `J^-1` times the mean score on `data`, evaluated at `p`.
pub(crate) fn mean_influence(p: &CccParams, data: &MultiSeries, info_inv: &[f64]) -> Result<Vec<f64>> {
    let v0 = initial_variances(data)?;
    let (_, g) = loglik_grad(p, data, v0, None);
    let n = data.nrows() as f64;
    Ok((0..N_PARAMS)
        .map(|i| (0..N_PARAMS).map(|j| info_inv[i * N_PARAMS + j] * g[j]).sum::<f64>() / n)
        .collect())
}
