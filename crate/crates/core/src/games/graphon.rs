use nalgebra::{DMatrix, DVector};

use super::secular;
use crate::error::{Error, Result};
use crate::estimator::{SvtEstimate, SymmetricFactors};
use crate::graphon::{refine, step_graphon_opnorm, Partition, StepFunction, StepGraphon};
use crate::spectral::symmetric_eigen_sorted;

/// Eigenvalues below this fraction of the largest one are dropped when a
/// step graphon is factored.
const RANK_TOL: f64 = 1e-12;

/// Finite-rank graphon `W(x,y) = Σ μᵢ φᵢ(x) φᵢ(y)` whose eigenfunctions are
/// constant on the cells of `partition` and orthonormal in `L₂[0,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralGraphon {
    partition: Partition,
    values: Vec<f64>,
    /// `cells × rank`; entry `(k, i)` is `φᵢ` on cell `k`.
    functions: DMatrix<f64>,
}

impl SpectralGraphon {
    pub fn new(partition: Partition, values: Vec<f64>, functions: DMatrix<f64>) -> Result<Self> {
        if functions.nrows() != partition.len() {
            return Err(Error::DimensionMismatch { expected: partition.len(), found: functions.nrows() });
        }
        if functions.ncols() != values.len() {
            return Err(Error::DimensionMismatch { expected: values.len(), found: functions.ncols() });
        }
        Ok(SpectralGraphon { partition, values, functions })
    }

    pub fn zero(partition: Partition) -> Self {
        let m = partition.len();
        SpectralGraphon { partition, values: Vec::new(), functions: DMatrix::zeros(m, 0) }
    }

    /// The empirical graphon `W_M` of `M = Σ λᵢ wᵢwᵢᵀ`: `μᵢ = λᵢ/n`, `φᵢ = √n wᵢ`.
    pub fn from_symmetric_factors(f: &SymmetricFactors) -> Self {
        let n = f.vectors.nrows();
        let nf = n as f64;
        SpectralGraphon {
            partition: Partition::uniform(n),
            values: f.values.iter().map(|l| l / nf).collect(),
            functions: &f.vectors * nf.sqrt(),
        }
    }

    /// Empirical graphon of the symmetrized estimate `(Q̂ + Q̂ᵀ)/2`.
    pub fn from_estimate(e: &SvtEstimate) -> Self {
        Self::from_symmetric_factors(&e.symmetric_factors())
    }

    pub fn from_step(g: &StepGraphon) -> Self {
        let m = g.weighted_matrix();
        let m = (&m + m.transpose()) * 0.5;
        let (vals, vecs) = symmetric_eigen_sorted(&m);
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].abs() > RANK_TOL * scale).collect();
        let lengths = g.lengths();
        let functions = DMatrix::from_fn(g.cells(), keep.len(), |k, c| vecs[(k, keep[c])] / lengths[k].sqrt());
        SpectralGraphon {
            partition: g.partition().clone(),
            values: keep.iter().map(|&i| vals[i]).collect(),
            functions,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SpectralGraphon {
            partition: self.partition.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            functions: self.functions.clone(),
        }
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn functions(&self) -> &DMatrix<f64> {
        &self.functions
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn opnorm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn to_step(&self) -> StepGraphon {
        let d = DMatrix::from_diagonal(&DVector::from_column_slice(&self.values));
        let t = &self.functions * d * self.functions.transpose();
        StepGraphon::new(self.partition.clone(), t).expect("shapes agree by construction")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphonSolution {
    pub theta_hat: StepFunction,
    pub multiplier: Option<f64>,
    /// `½ ‖s*‖²_{L₂}`
    pub welfare: f64,
    pub equilibrium: StepFunction,
    pub budget_residual: f64,
    pub hard_case: bool,
}

fn check_gamma_norm(gamma: f64, norm: f64, what: &str) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::invalid(format!("gamma = {gamma} must be nonnegative")));
    }
    if gamma * norm >= 1.0 {
        return Err(Error::SpectralCondition { what: what.to_string(), value: gamma * norm });
    }
    Ok(())
}

/// Optimal intervention for the graphon game `G(W, θ)` with `‖θ̂‖²_{L₂} ≤ B`.
///
/// `θ` splits into its coordinates on the `r` eigenfunctions and a residual
/// orthogonal to them, on which the operator acts as zero. The secular
/// equation then has at most `r + 1` terms.
pub fn optimal_intervention_lowrank(
    g: &SpectralGraphon,
    theta: &StepFunction,
    gamma: f64,
    budget: f64,
) -> Result<GraphonSolution> {
    check_gamma_norm(gamma, g.opnorm(), "gamma * ||W||_op")?;
    if !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::invalid(format!("budget {budget} must be nonnegative")));
    }
    let r = refine(&g.partition, theta.partition());
    let lengths = r.partition.lengths();
    let m = lengths.len();
    let rank = g.rank();
    let phi = DMatrix::from_fn(m, rank, |k, i| g.functions[(r.left[k], i)]);
    let th = DVector::from_fn(m, |k, _| theta.values()[r.right[k]]);
    let weighted = DVector::from_fn(m, |k, _| lengths[k] * th[k]);
    let coeffs = phi.tr_mul(&weighted);
    let perp = &th - &phi * &coeffs;
    let perp_norm = lengths.iter().zip(perp.iter()).map(|(l, v)| l * v * v).sum::<f64>().sqrt();

    let mut kappa: Vec<f64> = g.values.iter().map(|mu| 1.0 - gamma * mu).collect();
    let mut c: Vec<f64> = coeffs.iter().cloned().collect();
    let has_perp = perp_norm > 0.0;
    if has_perp {
        kappa.push(1.0);
        c.push(perp_norm);
    }
    let sol = if kappa.is_empty() && budget == 0.0 {
        secular::SecularSolution { x: Vec::new(), nu: None, hard_case: false, iterations: 0 }
    } else {
        secular::solve(&kappa, &c, budget)?
    };

    let mut hat = &phi * DVector::from_column_slice(&sol.x[..rank]);
    let mut eq = &phi * DVector::from_fn(rank, |i, _| (c[i] + sol.x[i]) / kappa[i]);
    if has_perp {
        let unit = &perp / perp_norm;
        hat.axpy(sol.x[rank], &unit, 1.0);
        eq.axpy(c[rank] + sol.x[rank], &unit, 1.0);
    }
    let norm_sq: f64 = lengths.iter().zip(hat.iter()).map(|(l, v)| l * v * v).sum();
    Ok(GraphonSolution {
        theta_hat: StepFunction::new(r.partition.clone(), hat)?,
        equilibrium: StepFunction::new(r.partition, eq)?,
        multiplier: sol.multiplier(),
        welfare: secular::objective(&kappa, &c, &sol.x),
        budget_residual: (norm_sq - budget).abs(),
        hard_case: sol.hard_case,
    })
}

/// LQ graphon game on a step graphon, solved densely on the partition.
#[derive(Clone, Debug)]
pub struct GraphonGame {
    graphon: StepGraphon,
    theta: StepFunction,
    gamma: f64,
}

impl GraphonGame {
    pub fn new(graphon: StepGraphon, theta: StepFunction, gamma: f64) -> Result<Self> {
        if !graphon.is_symmetric(1e-12) {
            return Err(Error::invalid("graphon must be symmetric"));
        }
        check_gamma_norm(gamma, step_graphon_opnorm(&graphon), "gamma * ||W||_op")?;
        Ok(GraphonGame { graphon, theta, gamma })
    }

    pub fn graphon(&self) -> &StepGraphon {
        &self.graphon
    }

    pub fn theta(&self) -> &StepFunction {
        &self.theta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Solves `(I − γ𝕎) s = θ + θ̂` on the common refinement of the graphon,
    /// `θ` and `θ̂` partitions.
    pub fn equilibrium(&self, theta_hat: &StepFunction) -> Result<StepFunction> {
        let r1 = refine(self.graphon.partition(), self.theta.partition());
        let r2 = refine(&r1.partition, theta_hat.partition());
        let fine = &r2.partition;
        let m = fine.len();
        let gmap: Vec<usize> = (0..m).map(|k| r1.left[r2.left[k]]).collect();
        let tmap: Vec<usize> = (0..m).map(|k| r1.right[r2.left[k]]).collect();
        let root: Vec<f64> = fine.lengths().iter().map(|l| l.sqrt()).collect();
        let w = self.graphon.values();
        let k = DMatrix::from_fn(m, m, |a, b| {
            let id = if a == b { 1.0 } else { 0.0 };
            id - self.gamma * root[a] * w[(gmap[a], gmap[b])] * root[b]
        });
        let rhs = DVector::from_fn(m, |a, _| root[a] * (self.theta.values()[tmap[a]] + theta_hat.values()[r2.right[a]]));
        let y = k
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Residual { what: "singular I - gamma W".into(), value: 0.0 })?;
        StepFunction::new(fine.clone(), DVector::from_fn(m, |a, _| y[a] / root[a]))
    }

    pub fn welfare(&self, theta_hat: &StepFunction) -> Result<f64> {
        let s = self.equilibrium(theta_hat)?;
        Ok(0.5 * s.l2_norm().powi(2))
    }

    pub fn optimal_intervention(&self, budget: f64) -> Result<GraphonSolution> {
        optimal_intervention_lowrank(&SpectralGraphon::from_step(&self.graphon), &self.theta, self.gamma, budget)
    }
}
