use nalgebra::DVector;

use super::graphon::{optimal_intervention_lowrank, GraphonSolution, SpectralGraphon};
use crate::error::{Error, Result};
use crate::graphon::{Partition, SampledNetwork, StepFunction};

/// How a graphon intervention is read back onto the nodes of a network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    /// `θ̂′ᵢ = N ∫_{(i−1)/N}^{i/N} t̂′`
    #[default]
    CellAverage,
    /// `θ̂′ᵢ = t̂′(i/N)`
    PointEval,
}

#[derive(Clone, Debug)]
pub struct Transfer {
    pub theta_prime: DVector<f64>,
    pub graphon_solution: GraphonSolution,
}

/// Intervention for a network of size `N = theta.len()` with budget
/// `network_budget`, computed from an estimate of the graphon of a smaller
/// network rescaled by `sparsity_ratio = ρ_N/ρ_n`.
///
/// The graphon problem uses budget `network_budget / N`, so that cell
/// averages are feasible for the network problem.
pub fn transfer_interventions(
    theta: &DVector<f64>,
    estimate: &SpectralGraphon,
    gamma: f64,
    network_budget: f64,
    sparsity_ratio: f64,
    mode: TransferMode,
) -> Result<Transfer> {
    let big_n = theta.len();
    if big_n == 0 {
        return Err(Error::invalid("empty heterogeneity vector"));
    }
    if !(sparsity_ratio > 0.0) || !sparsity_ratio.is_finite() {
        return Err(Error::invalid(format!("sparsity ratio {sparsity_ratio} must be positive")));
    }
    let scaled = estimate.scaled(sparsity_ratio);
    let value = gamma * scaled.opnorm();
    if value >= 1.0 {
        return Err(Error::SpectralCondition {
            what: "gamma * (rho_N / rho_n) * ||W_hat||_op".into(),
            value,
        });
    }
    let theta_step = StepFunction::from_vector(theta.clone());
    let sol = optimal_intervention_lowrank(&scaled, &theta_step, gamma, network_budget / big_n as f64)?;
    let theta_prime = match mode {
        TransferMode::CellAverage => sol.theta_hat.cell_averages(&Partition::uniform(big_n)),
        TransferMode::PointEval => {
            DVector::from_fn(big_n, |i, _| sol.theta_hat.eval((i + 1) as f64 / big_n as f64))
        }
    };
    Ok(Transfer { theta_prime, graphon_solution: sol })
}

/// `(d̄_N/(N−1)) / (d̄_n/(n−1))` from mean degrees.
pub fn estimate_sparsity_ratio(big: &SampledNetwork, small: &SampledNetwork) -> Result<f64> {
    if big.n < 2 || small.n < 2 {
        return Err(Error::invalid("both networks need at least two nodes"));
    }
    if small.edge_count() == 0 {
        return Err(Error::invalid("small network has no edges"));
    }
    let density = |net: &SampledNetwork| net.mean_degree() / (net.n - 1) as f64;
    Ok(density(big) / density(small))
}
