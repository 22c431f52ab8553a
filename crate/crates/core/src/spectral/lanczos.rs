use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::rng;

/// Largest (algebraic) eigenvalue of a symmetric operator and a unit
/// eigenvector, by Lanczos with full reorthogonalization.
///
/// Stops once `|β_k s_k| <= tol * ‖m‖` where `‖m‖` is estimated by the
/// largest Ritz value magnitude. The eigenvector is returned with its
/// largest-magnitude component positive.
pub fn top_eigenpair<Op: LinearOperator + ?Sized>(
    m: &Op,
    max_iters: usize,
    tol: f64,
    seed: u64,
) -> Result<(f64, DVector<f64>)> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::invalid("empty operator"));
    }
    let steps = max_iters.min(n).max(1);

    let mut stream = rng::stream(seed);
    let mut q = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut stream));
    q /= q.norm();

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
    let mut alphas: Vec<f64> = Vec::with_capacity(steps);
    let mut betas: Vec<f64> = Vec::with_capacity(steps);
    basis.push(q);
    let mut last_residual = f64::INFINITY;

    for j in 0..steps {
        let mut w = m.apply(&basis[j]);
        let alpha = basis[j].dot(&w);
        alphas.push(alpha);
        w.axpy(-alpha, &basis[j], 1.0);
        if j > 0 {
            w.axpy(-betas[j - 1], &basis[j - 1], 1.0);
        }
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let beta = w.norm();

        let check = j < 20 || j % 5 == 4 || j + 1 == steps || beta == 0.0;
        if check {
            let (theta, s) = ritz_top(&alphas, &betas);
            let scale = ritz_scale(&alphas, &betas).max(f64::MIN_POSITIVE);
            last_residual = (beta * s[j]).abs();
            let exhausted = j + 1 == n || beta <= 1e-14 * scale;
            if last_residual <= tol * scale || exhausted {
                let mut x = DVector::zeros(n);
                for (i, b) in basis.iter().enumerate().take(j + 1) {
                    x.axpy(s[i], b, 1.0);
                }
                x /= x.norm();
                orient(&mut x);
                return Ok((theta, x));
            }
        }
        betas.push(beta);
        basis.push(w / beta);
    }
    Err(Error::LanczosNoConvergence {
        iterations: steps,
        residual: last_residual,
    })
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

fn ritz_top(alphas: &[f64], betas: &[f64]) -> (f64, DVector<f64>) {
    let eig = tridiagonal(alphas, betas).symmetric_eigen();
    let (idx, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty");
    (theta, eig.eigenvectors.column(idx).into_owned())
}

fn ritz_scale(alphas: &[f64], betas: &[f64]) -> f64 {
    tridiagonal(alphas, betas)
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn orient(x: &mut DVector<f64>) {
    let imax = x.iamax();
    if x[imax] < 0.0 {
        x.neg_mut();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{truncated_svd, MatOps, SparseMatrix};

    #[test]
    fn diagonal_matrix() {
        let m = SparseMatrix::from_triplets(3, [(0, 0, 3.0), (1, 1, 1.0)]).unwrap();
        let (l, v) = top_eigenpair(&m, 50, 1e-12, 1).unwrap();
        assert!((l - 3.0).abs() < 1e-12);
        assert!((v[0] - 1.0).abs() < 1e-10);
        assert!(v[1].abs() < 1e-10 && v[2].abs() < 1e-10);
    }

    #[test]
    fn all_ones() {
        let m = DMatrix::from_element(5, 5, 1.0);
        let (l, v) = top_eigenpair(&m, 50, 1e-12, 4).unwrap();
        assert!((l - 5.0).abs() < 1e-12);
        for i in 0..5 {
            assert!((v[i] - 1.0 / 5f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn path_graph_on_three_nodes() {
        // Characteristic polynomial -λ³ + 2λ has largest root √2.
        let m = SparseMatrix::from_undirected_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let (l, _) = top_eigenpair(&m, 50, 1e-12, 0).unwrap();
        assert!((l - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn largest_algebraic_not_magnitude() {
        let m = SparseMatrix::from_triplets(3, [(0, 0, -5.0), (1, 1, 2.0), (2, 2, 1.0)]).unwrap();
        let (l, _) = top_eigenpair(&m, 50, 1e-12, 3).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
    }

    #[test]
    fn residual_meets_tolerance_on_random_graph() {
        let n = 300;
        let mut stream = rng::stream(12);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rand::Rng::random::<f64>(&mut stream) < 0.05 {
                    edges.push((i, j));
                }
            }
        }
        let m = SparseMatrix::from_undirected_edges(n, &edges).unwrap();
        let tol = 1e-10;
        let (l, x) = top_eigenpair(&m, 200, tol, 9).unwrap();
        let r = (m.mul_vec(&x) - l * &x).norm();
        let dense = m.to_dense();
        let norm = crate::spectral::spectral_norm(&dense);
        assert!(r <= 10.0 * tol * norm, "residual {r}");
        // Nonnegative matrix: top eigenvalue equals σ₁.
        let t = truncated_svd(&dense, 1, 10, 12, 1).unwrap();
        assert!((t[0].sigma - l).abs() < 1e-8, "{} vs {l}", t[0].sigma);
    }

    #[test]
    fn reports_non_convergence() {
        let n = 200;
        let m = DMatrix::from_fn(n, n, |i, j| if i == j { (i as f64).sqrt() } else { 0.0 });
        let err = top_eigenpair(&m, 3, 1e-14, 0).unwrap_err();
        assert!(matches!(err, Error::LanczosNoConvergence { iterations: 3, .. }));
    }
}
