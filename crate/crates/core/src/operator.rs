//! Matrix-free symmetric operators.

use nalgebra::DMatrix;

/// A real symmetric linear map applied without materializing its matrix.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;

    /// `y = A x`. `y` is fully overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
}

/// Dense symmetric matrix, mostly for tests and tiny problems.
#[derive(Debug, Clone)]
pub struct DenseOperator(pub DMatrix<f64>);

impl SymmetricOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.0[(i, j)] * x[j];
            }
            *yi = acc;
        }
    }
}

/// Diagonal operator.
#[derive(Debug, Clone)]
pub struct DiagonalOperator(pub Vec<f64>);

impl SymmetricOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), d) in y.iter_mut().zip(x).zip(&self.0) {
            *yi = d * xi;
        }
    }
}

/// `shift * I - A`
#[derive(Debug, Clone)]
pub struct NegatedShift<O> {
    pub inner: O,
    pub shift: f64,
}

impl<O: SymmetricOperator> SymmetricOperator for NegatedShift<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi - *yi;
        }
    }
}

/// Builds the dense matrix of `op` column by column and symmetrizes away rounding.
pub fn materialize<O: SymmetricOperator + ?Sized>(op: &O) -> DMatrix<f64> {
    let n = op.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    (&m + m.transpose()) * 0.5
}
