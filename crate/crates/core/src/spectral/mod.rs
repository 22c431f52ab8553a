//! Dense and sparse numerical kernels: truncated SVD, Lanczos for the top
//! eigenpair, and conjugate gradients. All routines are deterministic given
//! their inputs and seed.

mod cg;
mod lanczos;
mod sparse;
mod svd;

use nalgebra::{DMatrix, DVector};

pub use cg::cg_solve;
pub use lanczos::top_eigenpair;
pub use sparse::SparseMatrix;
pub use svd::{dense_svd, truncated_svd, SvdTriple, DENSE_FALLBACK_DIM, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS};

pub type DenseMatrix = DMatrix<f64>;

/// Matrix-block products, implemented by both storage formats.
pub trait MatOps {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `self * x`
    fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    /// `selfᵀ * x`
    fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64>;
    fn to_dense(&self) -> DMatrix<f64>;
}

impl MatOps for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self * x
    }

    fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.tr_mul(x)
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

/// A square linear map applied to vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
}

impl LinearOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.mul_vec(x)
    }
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if is_symmetric(m, 0.0) {
        m.clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    } else {
        (m.transpose() * m)
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0f64, |acc, v| acc.max(*v))
            .sqrt()
    }
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Symmetric eigendecomposition with eigenvalues in descending order.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(m.nrows(), n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}
