//! Small dense linear-algebra helpers shared by the solver modules.
//!
//! Everything here is a thin wrapper around [`nalgebra`] that fixes the
//! conventions used throughout the crate: max-abs norms for convergence
//! checks, column-major vectorization for Kronecker solves, and eigenvalue
//! extraction that reports failure instead of looping forever.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration cap handed to the QR/Schur eigenvalue algorithm.
const SCHUR_MAX_ITER: usize = 25_000;

/// Returns the symmetric part `(M + M^T) / 2` of a square matrix.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (m + m.transpose())
}

/// Largest absolute deviation from symmetry, `max |M - M^T|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// Largest absolute entry; zero for empty matrices.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Largest absolute entrywise difference between two equally shaped matrices.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    max_abs(&(a - b))
}

/// True when every entry of the matrix is finite.
pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Numerical rank: number of singular values above `rel_tol` times the
/// largest one. A zero (or empty) matrix has rank zero.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let sigma_max = sv.max();
    if sigma_max <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * sigma_max).count()
}

/// Reciprocal condition number `sigma_min / sigma_max` in the 2-norm.
/// Returns 0 for singular matrices and 1 for empty ones (vacuously well
/// conditioned).
pub fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let sigma_max = sv.max();
    if sigma_max <= 0.0 {
        return 0.0;
    }
    sv.min() / sigma_max
}

/// Smallest eigenvalue of a symmetric matrix; zero for empty matrices.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.symmetric_eigenvalues().min()
}

/// Eigenvalues of a square matrix as complex numbers, via the real Schur
/// form. Fails with [`Error::EigenFailure`] if the QR iteration stalls.
pub fn complex_eigenvalues(m: &DMatrix<f64>, context: &'static str) -> Result<Vec<Complex<f64>>> {
    debug_assert!(m.is_square());
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(Error::EigenFailure { context })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Moduli of the eigenvalues of a square matrix.
pub fn eigenvalue_moduli(m: &DMatrix<f64>, context: &'static str) -> Result<Vec<f64>> {
    Ok(complex_eigenvalues(m, context)?
        .iter()
        .map(|l| l.norm())
        .collect())
}

/// Spectral radius `max |lambda|`; zero for empty matrices.
pub fn spectral_radius(m: &DMatrix<f64>, context: &'static str) -> Result<f64> {
    Ok(eigenvalue_moduli(m, context)?
        .into_iter()
        .fold(0.0_f64, f64::max))
}

/// Solves `A X = B` by LU factorization with partial pivoting.
pub fn solve_lu(a: &DMatrix<f64>, b: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or(Error::Singular { context })
}

/// Column-major vectorization `vec(M)`.
pub fn vec_col(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col`]: reshapes a vector into an `rows x cols` matrix in
/// column-major order.
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), rows * cols);
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetrize_splits_asymmetric_part() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 3.0]);
        let s = symmetrize(&m);
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 3.0]));
        assert_eq!(asymmetry(&s), 0.0);
        assert_eq!(asymmetry(&m), 2.0);
    }

    #[test]
    fn rank_detects_collinear_columns() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert_eq!(numerical_rank(&m, 1e-10), 1);
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(numerical_rank(&id, 1e-10), 3);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(2, 2), 1e-10), 0);
    }

    #[test]
    fn eigenvalues_of_rotation_have_unit_modulus_pair() {
        // Companion-style matrix with characteristic polynomial l^2 + 0.81,
        // so the spectrum is +-0.9i and every modulus equals 0.9.
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -0.81, 1.0, 0.0]);
        let moduli = eigenvalue_moduli(&m, "test").unwrap();
        for modulus in moduli {
            assert_relative_eq!(modulus, 0.9, max_relative = 1e-12);
        }
        let scalar = DMatrix::from_row_slice(1, 1, &[0.8]);
        let eig = complex_eigenvalues(&scalar, "test").unwrap();
        assert_eq!(eig.len(), 1);
        assert_relative_eq!(eig[0].re, 0.8, max_relative = 1e-14);
        assert_eq!(eig[0].im, 0.0);
    }

    #[test]
    fn vec_col_roundtrip_is_column_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let v = vec_col(&m);
        // Column-major order walks down each column first.
        assert_eq!(v.as_slice(), &[1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
        assert_eq!(unvec(&v, 2, 3), m);
    }

    #[test]
    fn solve_lu_reports_singular_systems() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DMatrix::identity(2, 2);
        assert!(matches!(
            solve_lu(&a, &b, "test"),
            Err(Error::Singular { context: "test" })
        ));
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let x = solve_lu(&a, &b, "test").unwrap();
        assert_relative_eq!(x[(0, 0)], 0.5, max_relative = 1e-14);
        assert_relative_eq!(x[(1, 1)], 0.25, max_relative = 1e-14);
    }

    #[test]
    fn reciprocal_condition_of_identity_is_one() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(reciprocal_condition(&id), 1.0, max_relative = 1e-14);
        assert_eq!(reciprocal_condition(&DMatrix::<f64>::zeros(2, 2)), 0.0);
    }
}
