//! Hard singular value thresholding of adjacency matrices, its missing-links
//! variant, and the deviation bounds that go with it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::{empirical_graphon, SampledNetwork, StepGraphon};
use crate::spectral::{
    dense_svd, symmetric_eigen_sorted, truncated_svd, MatOps, SvdTriple, DEFAULT_OVERSAMPLE,
    DEFAULT_POWER_ITERS, DENSE_FALLBACK_DIM,
};

/// First rank requested by the adaptive search in [`svt`].
pub const INITIAL_RANK: usize = 8;
/// Eigenvalues of the symmetrized estimate below this fraction of the
/// largest one are treated as zero.
const FACTOR_DROP_TOL: f64 = 1e-9;

/// `Q̂_λ = Σ_{σᵢ ≥ λ} σᵢ uᵢ vᵢᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvtEstimate {
    pub triples: Vec<SvdTriple>,
    pub lambda: f64,
    pub n: usize,
    pub rho_used: Option<f64>,
}

/// Orthonormal eigen-factors of a symmetric low-rank matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricFactors {
    pub values: Vec<f64>,
    /// `n × r`, orthonormal columns.
    pub vectors: DMatrix<f64>,
}

impl SymmetricFactors {
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.values));
        &self.vectors * d * self.vectors.transpose()
    }
}

impl SvtEstimate {
    pub fn rank(&self) -> usize {
        self.triples.len()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut q = DMatrix::zeros(self.n, self.n);
        for t in &self.triples {
            q.ger(t.sigma, &t.u, &t.v, 1.0);
        }
        q
    }

    /// Eigen-factors of `(Q̂ + Q̂ᵀ)/2`, computed in the span of the
    /// retained singular vectors; at most `2·rank` of them.
    pub fn symmetric_factors(&self) -> SymmetricFactors {
        let r = self.rank();
        if r == 0 {
            return SymmetricFactors {
                values: Vec::new(),
                vectors: DMatrix::zeros(self.n, 0),
            };
        }
        let mut z = DMatrix::zeros(self.n, 2 * r);
        for (i, t) in self.triples.iter().enumerate() {
            z.set_column(i, &t.u);
            z.set_column(r + i, &t.v);
        }
        let qr = z.qr();
        let (basis, upper) = (qr.q(), qr.r());
        let mut mid = DMatrix::zeros(2 * r, 2 * r);
        for (i, t) in self.triples.iter().enumerate() {
            mid[(i, r + i)] = 0.5 * t.sigma;
            mid[(r + i, i)] = 0.5 * t.sigma;
        }
        let small = &upper * mid * upper.transpose();
        let small = (&small + small.transpose()) * 0.5;
        let (values, vectors) = symmetric_eigen_sorted(&small);
        let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let keep: Vec<usize> = (0..values.len())
            .filter(|&i| values[i].abs() > FACTOR_DROP_TOL * scale)
            .collect();
        let full = basis * vectors;
        SymmetricFactors {
            values: keep.iter().map(|&i| values[i]).collect(),
            vectors: DMatrix::from_fn(self.n, keep.len(), |row, c| full[(row, keep[c])]),
        }
    }
}

/// Thresholding estimate of `a` keeping every singular value `σ ≥ λ`.
///
/// Small matrices use a full SVD. Otherwise the randomized truncated SVD is
/// asked for `INITIAL_RANK` triples and the request doubles while the
/// smallest returned value still clears the threshold.
pub fn svt<M: MatOps + ?Sized>(a: &M, lambda: f64, seed: u64) -> Result<SvtEstimate> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("threshold {lambda} must be nonnegative")));
    }
    let n = square_dim(a)?;
    let mut triples = if n <= DENSE_FALLBACK_DIM {
        dense_svd(&a.to_dense())
    } else {
        let mut r = INITIAL_RANK.min(n);
        loop {
            let t = truncated_svd(a, r, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS, seed)?;
            let smallest = t.last().map_or(0.0, |x| x.sigma);
            if r < n && smallest >= lambda {
                r = (2 * r).min(n);
                continue;
            }
            break t;
        }
    };
    triples.retain(|t| t.sigma >= lambda);
    Ok(SvtEstimate {
        triples,
        lambda,
        n,
        rho_used: None,
    })
}

/// Best rank-`rank` approximation; `lambda` records the smallest kept σ.
pub fn truncated_estimate<M: MatOps + ?Sized>(a: &M, rank: usize, seed: u64) -> Result<SvtEstimate> {
    let n = square_dim(a)?;
    let triples = truncated_svd(a, rank, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS, seed)?;
    let lambda = triples.last().map_or(0.0, |t| t.sigma);
    Ok(SvtEstimate {
        triples,
        lambda,
        n,
        rho_used: None,
    })
}

/// Estimate of `Q` from a masked adjacency `Ã = M ∘ A` with known
/// observation probability `p`.
///
/// `lambda` is the threshold on the scale of `Ã`; the estimate thresholds
/// `Ã/p` at `λ/p`, i.e. it equals `Q̂_λ(Ã)/p`.
pub fn svt_missing_links<M: MatOps + ?Sized>(a_tilde: &M, p: f64, lambda: f64, seed: u64) -> Result<SvtEstimate> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("observation probability {p} outside (0,1]")));
    }
    svt(&Scaled { inner: a_tilde, factor: 1.0 / p }, lambda / p, seed)
}

struct Scaled<'a, M: ?Sized> {
    inner: &'a M,
    factor: f64,
}

impl<M: MatOps + ?Sized> MatOps for Scaled<'_, M> {
    fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.inner.mul_dense(x) * self.factor
    }

    fn tr_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.inner.tr_mul_dense(x) * self.factor
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.inner.to_dense() * self.factor
    }
}

fn square_dim<M: MatOps + ?Sized>(a: &M) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("thresholding expects a square matrix"));
    }
    Ok(a.nrows())
}

/// `(Q̂ + Q̂ᵀ)/2`
pub fn symmetrize(e: &SvtEstimate) -> DMatrix<f64> {
    let q = e.reconstruct();
    (&q + q.transpose()) * 0.5
}

/// Entrywise clamp to `[0,1]`. Not rank preserving.
pub fn clamp_unit(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| v.clamp(0.0, 1.0))
}

/// `6√(nρ)`
pub fn default_lambda(n: usize, rho: f64) -> f64 {
    6.0 * (n as f64 * rho).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    /// `6√(nρ)`, the value the error bound is stated for.
    Theory,
    /// `2√(nρ)`, smaller so that moderate `n` still keeps a few components.
    Experiment,
    Fixed { value: f64 },
}

impl LambdaRule {
    pub fn value(&self, n: usize, rho: f64) -> f64 {
        match self {
            LambdaRule::Theory => default_lambda(n, rho),
            LambdaRule::Experiment => 2.0 * (n as f64 * rho).sqrt(),
            LambdaRule::Fixed { value } => *value,
        }
    }
}

/// Empirical graphon of the (unsymmetrized, unclipped) thresholding estimate.
pub fn estimate_graphon(network: &SampledNetwork, lambda: f64, seed: u64) -> Result<StepGraphon> {
    let est = svt(network.adjacency.as_mat_ops(), lambda, seed)?;
    Ok(empirical_graphon(&est.reconstruct()))
}

/// Deviation bound `‖Q − Q̂_λ‖_op ≤ λ + w_δ` with
/// `w_δ = 4√(nρ) + √(C log(n/δ))`.
///
/// `c_universal` stands in for the unspecified absolute constant `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub w_delta: f64,
    pub theoretical_error_bound: f64,
    pub observed_error: Option<f64>,
    pub delta: f64,
    pub c_universal: f64,
}

pub fn w_delta(n: usize, rho: f64, delta: f64, c_universal: f64) -> f64 {
    4.0 * (n as f64 * rho).sqrt() + (c_universal * (n as f64 / delta).ln()).sqrt()
}

pub fn bound_report(n: usize, rho: f64, delta: f64, lambda: f64, c_universal: f64) -> Result<BoundReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::invalid(format!("delta = {delta} outside (0,1]")));
    }
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let w = w_delta(n, rho, delta, c_universal);
    Ok(BoundReport {
        w_delta: w,
        theoretical_error_bound: lambda + w,
        observed_error: None,
        delta,
        c_universal,
    })
}

/// `λ/p + 4√(nρ/p) + √(C log(n/δ))/p`, with `λ` on the scale of `Ã`.
pub fn missing_links_bound(n: usize, rho: f64, p: f64, delta: f64, lambda: f64, c_universal: f64) -> f64 {
    let nf = n as f64;
    lambda / p + 4.0 * (nf * rho / p).sqrt() + (c_universal * (nf / delta).ln()).sqrt() / p
}

/// `max{i : σᵢ(Q) ≥ λ − w_δ}` (1-based count; 0 if none).
pub fn rank_bound(q_singular_values: &[f64], lambda: f64, w_delta: f64) -> usize {
    q_singular_values
        .iter()
        .rposition(|&s| s >= lambda - w_delta)
        .map_or(0, |i| i + 1)
}

#[derive(Serialize, Deserialize)]
struct SvtRecord {
    n: usize,
    lambda: f64,
    rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rho_used: Option<f64>,
    sigma: Vec<f64>,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Serialize for SvtEstimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SvtRecord {
            n: self.n,
            lambda: self.lambda,
            rank: self.rank(),
            rho_used: self.rho_used,
            sigma: self.triples.iter().map(|t| t.sigma).collect(),
            u: self.triples.iter().map(|t| t.u.as_slice().to_vec()).collect(),
            v: self.triples.iter().map(|t| t.v.as_slice().to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SvtEstimate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let rec = SvtRecord::deserialize(d)?;
        let r = rec.sigma.len();
        if rec.rank != r || rec.u.len() != r || rec.v.len() != r {
            return Err(D::Error::custom("rank does not match factor counts"));
        }
        if rec.u.iter().chain(&rec.v).any(|x| x.len() != rec.n) {
            return Err(D::Error::custom("factor length does not match n"));
        }
        let triples = (0..r)
            .map(|i| SvdTriple {
                sigma: rec.sigma[i],
                u: DVector::from_column_slice(&rec.u[i]),
                v: DVector::from_column_slice(&rec.v[i]),
            })
            .collect();
        Ok(SvtEstimate {
            triples,
            lambda: rec.lambda,
            n: rec.n,
            rho_used: rec.rho_used,
        })
    }
}
