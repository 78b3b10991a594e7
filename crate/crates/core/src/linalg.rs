//! Smallest eigenvalue of a real symmetric matrix.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{MoqaError, Result};

/// Eigenvector residual tolerance, relative to `max(1, ‖A‖_F)`.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// `λ_min(A)` for symmetric `A`, with the eigenpair residual `‖Av − λv‖`
/// verified against [`EIGEN_TOLERANCE`].
pub fn smallest_eigenvalue(matrix: &DMatrix<f64>) -> Result<f64> {
    let dim = matrix.nrows();
    if dim == 0 || matrix.ncols() != dim {
        return Err(MoqaError::invalid("eigenvalue needs a non-empty square matrix"));
    }
    let max_iterations = 10 * dim * dim;
    let eigen = SymmetricEigen::try_new(matrix.clone(), f64::EPSILON, max_iterations).ok_or(
        MoqaError::Convergence {
            iterations: max_iterations,
            residual: f64::NAN,
        },
    )?;
    let (k, &lambda) = eigen
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty spectrum");
    let v = eigen.eigenvectors.column(k);
    let residual = (matrix * v - v * lambda).norm();
    if residual > EIGEN_TOLERANCE * matrix.norm().max(1.0) {
        return Err(MoqaError::Convergence {
            iterations: max_iterations,
            residual,
        });
    }
    Ok(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_off_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert!((smallest_eigenvalue(&m).unwrap() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn diagonal_matrix() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -2.0, 7.0]));
        assert!((smallest_eigenvalue(&m).unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_square() {
        let m = DMatrix::<f64>::zeros(2, 3);
        assert!(smallest_eigenvalue(&m).is_err());
    }
}
