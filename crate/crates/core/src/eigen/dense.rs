//! Dense reference eigensolver. Test oracle only; never used on the solve paths.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{EigenError, EigenPair};
use crate::linalg::canonicalize_sign;
use crate::operator::{materialize, SymmetricOperator};

/// Largest dimension the oracle accepts.
pub const DENSE_LIMIT: usize = 2000;

/// Full ascending spectrum of `op` with orthonormal, sign-canonical eigenvectors.
pub fn dense_oracle<O: SymmetricOperator + ?Sized>(op: &O) -> Result<Vec<EigenPair>, EigenError> {
    let n = op.dim();
    if n > DENSE_LIMIT {
        return Err(EigenError::TooLargeForDense { n, limit: DENSE_LIMIT });
    }
    Ok(dense_eigen(materialize(op)))
}

/// Ascending eigendecomposition of a symmetric matrix.
pub fn dense_eigen(matrix: DMatrix<f64>) -> Vec<EigenPair> {
    let n = matrix.nrows();
    if n == 0 {
        return Vec::new();
    }
    let eig = SymmetricEigen::new(matrix);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    idx.into_iter()
        .map(|c| {
            let mut vector: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            canonicalize_sign(&mut vector);
            EigenPair {
                value: eig.eigenvalues[c],
                vector,
            }
        })
        .collect()
}

/// Ascending eigenvalues only.
pub fn dense_spectrum(matrix: DMatrix<f64>) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(matrix).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}
