//! Small dense helpers over `nalgebra` used by the analysis code.

use nalgebra::{DMatrix, SymmetricEigen};

/// `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    if a.nrows() == 1 {
        return vec![a[(0, 0)]];
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(a)).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Largest eigenvalue of a symmetric matrix. For a PSD matrix this is its
/// spectral norm.
pub fn largest_eigenvalue(a: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(a).last().copied().unwrap_or(0.0)
}

/// Matrix with `f64` entries rendered as nested rows, for serialization.
pub fn to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|r| a.row(r).iter().copied().collect()).collect()
}
