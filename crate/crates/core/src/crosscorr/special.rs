//! Upper-tail probabilities for the chi-square and standard normal laws, via
//! the regularized incomplete gamma function.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Gamma(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    // modified Lentz
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_continued_fraction(a, x)
    }
}

/// `P(X > x)` for `X ~ chi^2(df)`.
pub fn chi2_sf(x: f64, df: usize) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidParameter(format!("chi-square argument {x} is not finite")));
    }
    if df == 0 {
        return Err(Error::InvalidParameter("chi-square degrees of freedom must be positive".into()));
    }
    Ok(gamma_q(df as f64 / 2.0, x.max(0.0) / 2.0))
}

/// `P(Z > z)` for `Z ~ N(0, 1)`.
pub fn norm_sf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!("normal argument {z} is not finite")));
    }
    let tail = 0.5 * gamma_q(0.5, 0.5 * z * z);
    Ok(if z >= 0.0 { tail } else { 1.0 - tail })
}

/// Inverts a decreasing survival function on `[lo, hi]` by bisection.
fn invert_sf(p: f64, mut lo: f64, mut hi: f64, sf: impl Fn(f64) -> f64) -> f64 {
    while sf(hi) > p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sf(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Upper `p` quantile of `chi^2(df)`.
pub fn chi2_isf(p: f64, df: usize) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) || df == 0 {
        return Err(Error::InvalidParameter(format!("chi2_isf needs p in (0,1) and df > 0, got {p}, {df}")));
    }
    Ok(invert_sf(p, 0.0, df as f64 + 10.0, |x| gamma_q(df as f64 / 2.0, x / 2.0)))
}

/// Upper `p` quantile of the standard normal.
pub fn norm_isf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("norm_isf needs p in (0,1), got {p}")));
    }
    if p > 0.5 {
        return Ok(-norm_isf(1.0 - p)?);
    }
    Ok(invert_sf(p, 0.0, 10.0, |z| 0.5 * gamma_q(0.5, 0.5 * z * z)))
}
