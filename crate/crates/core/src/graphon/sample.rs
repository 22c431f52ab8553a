use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::model::GraphonModel;
use crate::error::{Error, Result};
use crate::rng;
use crate::spectral::{LinearOperator, MatOps, SparseMatrix};

/// Sparse storage is used when `rho < SPARSE_MAX_DENSITY` and `n > SPARSE_MIN_NODES`.
pub const SPARSE_MAX_DENSITY: f64 = 0.05;
pub const SPARSE_MIN_NODES: usize = 2000;

#[derive(Clone, Debug, PartialEq)]
pub enum Adjacency {
    Dense(DMatrix<f64>),
    Sparse(SparseMatrix),
}

impl Adjacency {
    pub fn dim(&self) -> usize {
        match self {
            Adjacency::Dense(m) => m.nrows(),
            Adjacency::Sparse(s) => s.dim(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Adjacency::Dense(m) => m.clone(),
            Adjacency::Sparse(s) => s.to_dense(),
        }
    }

    pub fn as_mat_ops(&self) -> &dyn MatOps {
        match self {
            Adjacency::Dense(m) => m,
            Adjacency::Sparse(s) => s,
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Adjacency::Dense(m) => m * x,
            Adjacency::Sparse(s) => s.mul_vec(x),
        }
    }
}

impl LinearOperator for Adjacency {
    fn dim(&self) -> usize {
        Adjacency::dim(self)
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.mul_vec(x)
    }
}

/// An undirected network drawn from a graphon, with its sorted latent positions.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledNetwork {
    pub n: usize,
    pub adjacency: Adjacency,
    /// ξ₍₁₎ ≤ … ≤ ξ₍ₙ₎
    pub xi: Vec<f64>,
    pub rho: f64,
    pub seed: u64,
}

/// `Q_{ij} = ρ W(ξ₍ᵢ₎, ξ₍ⱼ₎)`, diagonal included.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    pub q: DMatrix<f64>,
    pub rho: f64,
}

impl SampledNetwork {
    /// Builds a network from an edge list, validating indices and positions.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], xi: Vec<f64>, rho: f64, seed: u64) -> Result<Self> {
        if xi.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: xi.len() });
        }
        if xi.windows(2).any(|w| w[1] < w[0]) || xi.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::invalid("latent positions must be sorted and inside [0,1]"));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::invalid(format!("rho = {rho} outside (0,1]")));
        }
        let adjacency = if use_sparse(n, rho) {
            Adjacency::Sparse(SparseMatrix::from_undirected_edges(n, edges)?)
        } else {
            let mut a = DMatrix::zeros(n, n);
            for &(i, j) in edges {
                if i >= n || j >= n || i == j {
                    return Err(Error::invalid(format!("bad edge ({i}, {j}) for n = {n}")));
                }
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
            Adjacency::Dense(a)
        };
        Ok(SampledNetwork { n, adjacency, xi, rho, seed })
    }

    /// Edges `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match &self.adjacency {
            Adjacency::Dense(a) => {
                let mut out = Vec::new();
                for i in 0..self.n {
                    for j in (i + 1)..self.n {
                        if a[(i, j)] != 0.0 {
                            out.push((i, j));
                        }
                    }
                }
                out
            }
            Adjacency::Sparse(s) => s.iter().filter(|&(i, j, _)| i < j).map(|(i, j, _)| (i, j)).collect(),
        }
    }

    pub fn edge_count(&self) -> usize {
        match &self.adjacency {
            Adjacency::Dense(a) => a.iter().filter(|&&v| v != 0.0).count() / 2,
            Adjacency::Sparse(s) => s.nnz() / 2,
        }
    }

    pub fn degrees(&self) -> Vec<f64> {
        match &self.adjacency {
            Adjacency::Dense(a) => a.row_iter().map(|r| r.sum()).collect(),
            Adjacency::Sparse(s) => s.row_sums(),
        }
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.n as f64
    }

    /// Checks `A = Aᵀ`, zero diagonal, 0/1 entries and sorted positions.
    pub fn check_invariants(&self) -> Result<()> {
        let a = self.adjacency.to_dense();
        for i in 0..self.n {
            if a[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..self.n {
                let v = a[(i, j)];
                if v != a[(j, i)] || !(v == 0.0 || v == 1.0) {
                    return Err(Error::invalid(format!("entry ({i},{j}) breaks symmetry or 0/1")));
                }
            }
        }
        if self.xi.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("latent positions not sorted"));
        }
        Ok(())
    }
}

fn use_sparse(n: usize, rho: f64) -> bool {
    rho < SPARSE_MAX_DENSITY && n > SPARSE_MIN_NODES
}

/// Samples a network of `n` nodes from `rho · model`.
///
/// Draws `n` uniform latent positions and sorts them, then one uniform per
/// unordered pair `{i, j}` in lexicographic order; the edge is present when
/// that uniform falls below `Q_{ij}`. Sharing the stream across values of
/// `rho` therefore couples the samples monotonically.
pub fn sample_network(
    model: &GraphonModel,
    n: usize,
    rho: f64,
    seed: u64,
    return_q: bool,
) -> Result<(SampledNetwork, Option<WeightMatrix>)> {
    if n == 0 {
        return Err(Error::invalid("network needs at least one node"));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid(format!("rho = {rho} outside (0,1]")));
    }
    model.validate()?;

    let mut stream = rng::stream(seed);
    let mut xi: Vec<f64> = (0..n).map(|_| stream.random::<f64>()).collect();
    xi.sort_by(f64::total_cmp);

    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let u: f64 = stream.random();
            if u < rho * model.eval(xi[i], xi[j]) {
                edges.push((i, j));
            }
        }
    }
    let q = return_q.then(|| WeightMatrix {
        q: DMatrix::from_fn(n, n, |i, j| rho * model.eval(xi[i], xi[j])),
        rho,
    });
    let network = SampledNetwork::from_edges(n, &edges, xi, rho, seed)?;
    Ok((network, q))
}
