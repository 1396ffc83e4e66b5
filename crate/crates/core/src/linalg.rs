//! Small dense linear-algebra helpers over nalgebra.

use nalgebra::{DMatrix, DVector};

/// Minimum-Euclidean-norm solution of `min ‖A x − b‖₂` via the SVD.
///
/// Returns the solution and the numerical rank of `A`. Singular values below
/// `max(rows, cols) · σ_max · ε` are treated as zero.
pub fn min_norm_least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, usize) {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return (DVector::zeros(cols), 0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = rows.max(cols) as f64 * smax * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank == 0 {
        return (DVector::zeros(cols), 0);
    }
    let x = svd
        .solve(b, tol)
        .expect("svd computed with both singular-vector sets");
    (x, rank)
}

/// Extreme eigenvalues `(λ_min, λ_max)` of a symmetric matrix.
pub fn symmetric_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// `Σ^{-1/2}` for a symmetric positive definite `Σ`.
pub fn inverse_sqrt(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = sigma.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Dense matrix from a slice of equal-length rows.
pub fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}
