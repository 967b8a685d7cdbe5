//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Condition number above which a symmetric matrix is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

pub fn from_row_major(d: usize, values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, values)
}

fn symmetric_eigen(v: &DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    if !v.is_square() {
        return Err(Error::Dimension(format!("expected a square matrix, got {}x{}", v.nrows(), v.ncols())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { row: 0, col: 0 });
    }
    // symmetrize so tiny asymmetries from accumulation do not leak into the eigensolver
    let sym = (v + v.transpose()) * 0.5;
    Ok(sym.symmetric_eigen())
}

/// Symmetric PSD square root via eigen-decomposition. Eigenvalues in
/// `[-1e-8 ||V||, 0)` are clipped to zero; anything more negative is an error.
pub fn psd_sqrt(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(v)?;
    let scale = v.norm().max(f64::MIN_POSITIVE);
    let min = eig.eigenvalues.min();
    if min < -1e-8 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Inverse symmetric square root of a symmetric positive definite matrix.
pub fn inv_sqrt_spd(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(v)?;
    check_conditioning(&eig.eigenvalues)?;
    let roots = eig.eigenvalues.map(|l| 1.0 / l.sqrt());
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Inverse of a symmetric positive definite matrix, rejecting ill-conditioned input.
pub fn inverse_spd(v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(v)?;
    check_conditioning(&eig.eigenvalues)?;
    let inv = eig.eigenvalues.map(|l| 1.0 / l);
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&inv) * q.transpose())
}

fn check_conditioning(eigenvalues: &nalgebra::DVector<f64>) -> Result<()> {
    let max = eigenvalues.max();
    let min = eigenvalues.min();
    if !(max > 0.0) || min <= 0.0 || max / min > MAX_CONDITION {
        return Err(Error::Singular(format!("eigenvalues in [{min:e}, {max:e}]")));
    }
    Ok(())
}

/// Inverse square root of a 2x2 SPD matrix `[[a, b], [b, c]]` in closed form,
/// returned as `(p, q, r)` for `[[p, q], [q, r]]`.
#[inline]
pub fn inv_sqrt_2x2(a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    // sqrt(V) = (V + s I) / t with s = sqrt(det V), t = sqrt(tr V + 2 s)
    let s = (a * c - b * b).sqrt();
    let t = (a + c + 2.0 * s).sqrt();
    let (sa, sb, sc) = ((a + s) / t, b / t, (c + s) / t);
    let det = sa * sc - sb * sb;
    (sc / det, -sb / det, sa / det)
}

/// Square root of a 2x2 PSD matrix in closed form.
#[inline]
pub fn sqrt_2x2(a: f64, b: f64, c: f64) -> (f64, f64, f64) {
    let s = (a * c - b * b).max(0.0).sqrt();
    let t = (a + c + 2.0 * s).sqrt();
    ((a + s) / t, b / t, (c + s) / t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_2x2_matches_eigen_route() {
        let v = from_row_major(2, &[2.0, 0.7, 0.7, 1.3]);
        let s = psd_sqrt(&v).unwrap();
        let (p, q, r) = sqrt_2x2(2.0, 0.7, 1.3);
        assert_relative_eq!(s[(0, 0)], p, epsilon = 1e-12);
        assert_relative_eq!(s[(0, 1)], q, epsilon = 1e-12);
        assert_relative_eq!(s[(1, 1)], r, epsilon = 1e-12);
        let is = inv_sqrt_spd(&v).unwrap();
        let (p, q, r) = inv_sqrt_2x2(2.0, 0.7, 1.3);
        assert_relative_eq!(is[(0, 0)], p, epsilon = 1e-12);
        assert_relative_eq!(is[(0, 1)], q, epsilon = 1e-12);
        assert_relative_eq!(is[(1, 1)], r, epsilon = 1e-12);
    }

    #[test]
    fn ill_conditioned_inverse_is_rejected() {
        let v = from_row_major(2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert!(matches!(inverse_spd(&v), Err(Error::Singular(_))));
    }
}
