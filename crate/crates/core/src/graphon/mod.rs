//! Graphon models, network sampling, empirical graphons and operator norms
//! of step-function graphons.

mod io;
mod model;
mod sample;
mod step;

pub use io::{load_network, read_edge_list, save_network, write_edge_list, NetworkSidecar};
pub use model::{CustomKernel, GraphonModel, Kernel, Smoothness};
pub use sample::{sample_network, Adjacency, SampledNetwork, WeightMatrix, SPARSE_MIN_NODES, SPARSE_MAX_DENSITY};
pub use step::{
    discretize, empirical_graphon, refine, step_graphon_distance, step_graphon_opnorm, Partition,
    Refinement, StepFunction, StepGraphon,
};
