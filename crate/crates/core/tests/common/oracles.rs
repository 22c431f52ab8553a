//! Reference routines that do not share code paths with the library:
//! Jacobi rotations, Gaussian elimination, sort-based percentiles and a
//! sphere-constrained ascent for the intervention problem.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Singular values (descending) by one-sided Jacobi orthogonalization.
pub fn jacobi_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    // Work on the orientation with at least as many rows as columns.
    let mut a: Vec<Vec<f64>> = if rows >= cols {
        (0..cols).map(|j| (0..rows).map(|i| m[(i, j)]).collect()).collect()
    } else {
        (0..rows).map(|i| (0..cols).map(|j| m[(i, j)]).collect()).collect()
    };
    let k = a.len();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..k {
            for q in (p + 1)..k {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma.abs() <= 1e-300 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..a[p].len() {
                    let (x, y) = (a[p][i], a[q][i]);
                    a[p][i] = c * x - s * y;
                    a[q][i] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = a.iter().map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Eigenvalues (descending) and eigenvectors of a symmetric matrix by cyclic Jacobi.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Spectral norm via the Jacobi singular values.
pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    jacobi_singular_values(m).first().copied().unwrap_or(0.0)
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| a[(i, j)]).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    DVector::from_vec(x)
}

/// Explicit inverse, column by column through `gauss_solve`.
pub fn inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut inv = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        inv.set_column(j, &gauss_solve(a, &e));
    }
    inv
}

/// `Σ_{k=0}^{terms-1} (γA/n)^k θ`.
pub fn neumann_series(a: &DMatrix<f64>, gamma: f64, theta: &DVector<f64>, terms: usize) -> DVector<f64> {
    let n = a.nrows() as f64;
    let step = a * (gamma / n);
    let mut term = theta.clone();
    let mut sum = theta.clone();
    for _ in 1..terms {
        term = &step * term;
        sum += &term;
    }
    sum
}

/// Network welfare `½(1/n)‖(I − γA/n)^{-1}(θ + x)‖²` through an explicit inverse.
pub fn brute_welfare(a: &DMatrix<f64>, gamma: f64, theta: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let n = a.nrows();
    let k = DMatrix::<f64>::identity(n, n) - a * (gamma / n as f64);
    let s = inverse(&k) * (theta + x);
    0.5 * s.norm_squared() / n as f64
}

/// Best welfare found by sphere-projected ascent from `restarts` random starts.
///
/// Each step maps `x` to `√B · g/‖g‖` with `g` the welfare gradient; for a
/// convex objective this never decreases the value.
pub fn sphere_ascent(
    a: &DMatrix<f64>,
    gamma: f64,
    theta: &DVector<f64>,
    budget: f64,
    restarts: usize,
    steps: usize,
    seed: u64,
) -> Vec<(f64, DVector<f64>)> {
    let n = a.nrows();
    let k = DMatrix::<f64>::identity(n, n) - a * (gamma / n as f64);
    let kinv = inverse(&k);
    let m = kinv.transpose() * &kinv;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let radius = budget.sqrt();
    let mut out = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let mut x = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        x *= radius / x.norm();
        for _ in 0..steps {
            let g = &m * (theta + &x);
            let gn = g.norm();
            if gn == 0.0 {
                break;
            }
            x = g * (radius / gn);
        }
        let w = 0.5 * (&kinv * (theta + &x)).norm_squared() / n as f64;
        out.push((w, x));
    }
    out
}

/// Percentile by linear interpolation between sorted order statistics.
pub fn sorted_percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.len() == 1 {
        return v[0];
    }
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
