use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use super::MatOps;
use crate::error::{Error, Result};
use crate::rng;

pub const DEFAULT_OVERSAMPLE: usize = 10;
pub const DEFAULT_POWER_ITERS: usize = 2;
/// At or below this `min(rows, cols)` the full SVD is computed directly.
pub const DENSE_FALLBACK_DIM: usize = 64;

/// One singular triple `σ u vᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdTriple {
    pub sigma: f64,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

/// Full thin SVD of a dense matrix, σ descending.
///
/// One-sided Jacobi on the columns of `m` (or of `mᵀ` when `m` is wide).
/// nalgebra's bidiagonal SVD is avoided because it can return wrong factors
/// for some rank-deficient inputs, e.g. the 5×5 all-ones matrix.
pub fn dense_svd(m: &DMatrix<f64>) -> Vec<SvdTriple> {
    if m.nrows() < m.ncols() {
        return dense_svd(&m.transpose())
            .into_iter()
            .map(|t| SvdTriple { sigma: t.sigma, u: t.v, v: t.u })
            .collect();
    }
    let (rows, cols) = m.shape();
    let mut w = m.clone();
    let mut v = DMatrix::<f64>::identity(cols, cols);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = (0..cols).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut triples: Vec<SvdTriple> = Vec::with_capacity(cols);
    for &j in &order {
        let sigma = norms[j];
        let u = if sigma > f64::MIN_POSITIVE {
            w.column(j) / sigma
        } else {
            complete_basis(rows, triples.iter().map(|t| &t.u))
        };
        triples.push(SvdTriple {
            sigma,
            u,
            v: v.column(j).into_owned(),
        });
    }
    triples
}

const JACOBI_MAX_SWEEPS: usize = 80;

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let (a, b) = (m[(i, p)], m[(i, q)]);
        m[(i, p)] = c * a - s * b;
        m[(i, q)] = s * a + c * b;
    }
}

/// A unit vector orthogonal to `basis`, taken from the standard basis.
fn complete_basis<'a>(dim: usize, basis: impl Iterator<Item = &'a DVector<f64>> + Clone) -> DVector<f64> {
    for k in 0..dim {
        let mut x = DVector::zeros(dim);
        x[k] = 1.0;
        for _ in 0..2 {
            for b in basis.clone() {
                let proj = b.dot(&x);
                x.axpy(-proj, b, 1.0);
            }
        }
        let norm = x.norm();
        if norm > 0.5 {
            return x / norm;
        }
    }
    DVector::zeros(dim)
}

/// Leading `target_rank` singular triples of `m`, σ descending.
///
/// Uses the randomized range finder with `oversample` extra Gaussian probes
/// and `power_iters` subspace iterations. The probe matrix is filled
/// column-major from the ChaCha8 stream of `seed`. When
/// `min(rows, cols) <= DENSE_FALLBACK_DIM` the full SVD is used instead. The
/// oversample is clipped so the sketch never exceeds `min(rows, cols)`
/// columns.
pub fn truncated_svd<M: MatOps + ?Sized>(
    m: &M,
    target_rank: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<Vec<SvdTriple>> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let min_dim = rows.min(cols);
    if target_rank > min_dim {
        return Err(Error::RankTooLarge {
            requested: target_rank,
            available: min_dim,
        });
    }
    if target_rank == 0 {
        return Ok(Vec::new());
    }
    if min_dim <= DENSE_FALLBACK_DIM {
        let mut all = dense_svd(&m.to_dense());
        all.truncate(target_rank);
        return Ok(all);
    }

    let sketch = (target_rank + oversample).min(min_dim);
    let mut stream = rng::stream(seed);
    let probes: Vec<f64> = (0..cols * sketch)
        .map(|_| StandardNormal.sample(&mut stream))
        .collect();
    let omega = DMatrix::from_vec(cols, sketch, probes);

    let mut q = orthonormal_basis(m.mul_dense(&omega));
    for _ in 0..power_iters {
        let z = orthonormal_basis(m.tr_mul_dense(&q));
        q = orthonormal_basis(m.mul_dense(&z));
    }
    // B = Qᵀ M, formed as (Mᵀ Q)ᵀ
    let b = m.tr_mul_dense(&q).transpose();
    let small = dense_svd(&b);
    Ok(small
        .into_iter()
        .take(target_rank)
        .map(|t| SvdTriple {
            sigma: t.sigma,
            u: &q * t.u,
            v: t.v,
        })
        .collect())
}

fn orthonormal_basis(y: DMatrix<f64>) -> DMatrix<f64> {
    y.qr().q()
}
