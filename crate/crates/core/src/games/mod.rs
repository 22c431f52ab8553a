//! Linear-quadratic network and graphon games: equilibria, welfare and
//! budget-constrained optimal interventions.

mod bounds;
mod graphon;
mod network;
pub mod secular;
mod transfer;

pub use bounds::{suboptimality_bound, SuboptimalityBound};
pub use graphon::{optimal_intervention_lowrank, GraphonGame, GraphonSolution, SpectralGraphon};
pub use network::{
    optimal_intervention, optimal_intervention_cg, optimal_intervention_with, CgOptions, InterventionRecord,
    InterventionSolution, NetworkGame, NetworkSpectrum, DENSE_EIGEN_MAX,
};
pub use transfer::{estimate_sparsity_ratio, transfer_interventions, Transfer, TransferMode};
