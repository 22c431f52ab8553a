use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentId};
use crate::error::{Error, Result};
use crate::estimator::{svt, truncated_estimate, SvtEstimate};
use crate::games::{
    estimate_sparsity_ratio, optimal_intervention_with, transfer_interventions, NetworkGame, NetworkSpectrum,
    SpectralGraphon,
};
use crate::graphon::{sample_network, GraphonModel, SampledNetwork};
use crate::rng;

pub const SCHEMA_VERSION: u32 = 1;

/// One replication of one method at one network size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub method: String,
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub welfare_true: f64,
    pub welfare_estimated: f64,
    /// `welfare_true − welfare_estimated`
    pub gap: f64,
    pub estimator_rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

/// The 4-community block matrix of the SBM experiments: `B_ij = u_ij/2`
/// off the diagonal and `(1 + u_ii)/2` on it, drawn once per base seed.
pub fn sbm_blocks(base_seed: u64) -> Vec<Vec<f64>> {
    let k = 4;
    let mut stream = rng::stream(rng::derive_seed(base_seed, "sbm/blocks"));
    let mut b = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let u: f64 = rand::Rng::random(&mut stream);
            let v = if i == j { (1.0 + u) / 2.0 } else { u / 2.0 };
            b[i][j] = v;
            b[j][i] = v;
        }
    }
    b
}

pub fn sbm_model(base_seed: u64) -> GraphonModel {
    GraphonModel::sbm(vec![0.25, 0.5, 0.75], sbm_blocks(base_seed)).expect("block matrix is valid")
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let mut rows = match config.experiment {
        ExperimentId::Holder => run_experiment_holder(config)?,
        ExperimentId::Sbm => run_experiment_sbm(config)?,
        ExperimentId::Transfer => run_experiment_transfer(config)?,
        ExperimentId::Custom => {
            let model = config.model.clone().ok_or_else(|| Error::invalid("custom experiment needs a model"))?;
            run_single_network(config, &model, "svt")?
        }
    };
    sort_rows(&mut rows);
    Ok(rows)
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        (a.n, a.replication, &a.method).cmp(&(b.n, b.replication, &b.method))
    });
}

fn expect_experiment(config: &ExperimentConfig, id: ExperimentId) -> Result<()> {
    if config.experiment != id {
        return Err(Error::invalid(format!(
            "config is for {}, not {}",
            config.experiment.as_str(),
            id.as_str()
        )));
    }
    config.validate()
}

fn replication_seed(config: &ExperimentConfig, n: usize, rep: usize) -> u64 {
    rng::derive_seed(config.base_seed, &format!("{}/{n}/{rep}", config.experiment.as_str()))
}

fn squared_positions(net: &SampledNetwork) -> DVector<f64> {
    DVector::from_iterator(net.n, net.xi.iter().map(|x| x * x))
}

fn estimate(config: &ExperimentConfig, net: &SampledNetwork, seed: u64) -> Result<SvtEstimate> {
    let a = net.adjacency.as_mat_ops();
    match config.svd_rank {
        Some(r) => truncated_estimate(a, r, seed),
        None => {
            let mut e = svt(a, config.lambda.value(net.n, net.rho), seed)?;
            e.rho_used = Some(net.rho);
            Ok(e)
        }
    }
}

/// A network sampled from `ρₙW` with `θᵢ = ξ₍ᵢ₎²`, its optimal intervention
/// and the welfare it reaches.
struct Solved {
    net: SampledNetwork,
    theta: DVector<f64>,
    spectrum: NetworkSpectrum,
    welfare: f64,
    budget: f64,
}

fn solve_network(config: &ExperimentConfig, model: &GraphonModel, n: usize, seed: u64) -> Result<Solved> {
    let (net, _) = sample_network(model, n, config.rho.value(n), seed, false)?;
    let theta = squared_positions(&net);
    let game = NetworkGame::new(net.adjacency.clone(), config.gamma, theta.clone())?;
    let spectrum = NetworkSpectrum::of_game(&game);
    let budget = config.budget.value(n);
    let opt = optimal_intervention_with(&game, &spectrum, budget)?;
    Ok(Solved { net, theta, spectrum, welfare: opt.welfare, budget })
}

impl Solved {
    #[allow(clippy::too_many_arguments)]
    fn gap_row(
        &self,
        config: &ExperimentConfig,
        method: &str,
        est: &SpectralGraphon,
        ratio: f64,
        replication: usize,
        seed: u64,
        rank: usize,
        started: Instant,
        n: usize,
    ) -> Result<ResultRow> {
        let t = transfer_interventions(&self.theta, est, config.gamma, self.budget, ratio, config.transfer_mode)?;
        let welfare_estimated = self.spectrum.welfare(config.gamma, &self.theta, &t.theta_prime);
        Ok(ResultRow {
            experiment: config.experiment.as_str().to_string(),
            method: method.to_string(),
            n,
            replication,
            seed,
            welfare_true: self.welfare,
            welfare_estimated,
            gap: self.welfare - welfare_estimated,
            estimator_rank: rank,
            wall_time_ms: config.include_timing.then(|| started.elapsed().as_secs_f64() * 1e3),
        })
    }
}

fn run_single_network(config: &ExperimentConfig, model: &GraphonModel, method: &str) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        for rep in 0..config.replications {
            let started = Instant::now();
            let seed = replication_seed(config, n, rep);
            let solved = solve_network(config, model, n, seed)?;
            let e = estimate(config, &solved.net, seed)?;
            let sg = SpectralGraphon::from_estimate(&e);
            rows.push(solved.gap_row(config, method, &sg, 1.0, rep, seed, e.rank(), started, n)?);
        }
    }
    Ok(rows)
}

/// Networks from `W₁(x,y) = √|x−y|`; interventions from the empirical
/// graphon of the thresholding estimate.
pub fn run_experiment_holder(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    expect_experiment(config, ExperimentId::Holder)?;
    run_single_network(config, &GraphonModel::sqrt_abs_diff(), "svt")
}

/// Networks from the 4-community SBM; interventions from the true sparse
/// graphon (`graphon`) and from a rank-`svd_rank` truncated SVD (`svd4` for
/// the default rank).
pub fn run_experiment_sbm(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    expect_experiment(config, ExperimentId::Sbm)?;
    let model = sbm_model(config.base_seed);
    let truth = model.to_step().expect("SBM has a step form");
    let rank = config.svd_rank.unwrap_or(4);
    let svd_label = format!("svd{rank}");
    let mut svd_config = config.clone();
    svd_config.svd_rank = Some(rank);
    let mut rows = Vec::new();
    for &n in &config.n_grid {
        let true_graphon = SpectralGraphon::from_step(&truth.scaled(config.rho.value(n)));
        for rep in 0..config.replications {
            let started = Instant::now();
            let seed = replication_seed(config, n, rep);
            let solved = solve_network(config, &model, n, seed)?;
            rows.push(solved.gap_row(config, "graphon", &true_graphon, 1.0, rep, seed, true_graphon.rank(), started, n)?);
            let started = Instant::now();
            let e = estimate(&svd_config, &solved.net, seed)?;
            let sg = SpectralGraphon::from_estimate(&e);
            rows.push(solved.gap_row(config, &svd_label, &sg, 1.0, rep, seed, e.rank(), started, n)?);
        }
    }
    Ok(rows)
}

/// One large network of size `big_n`; for every `n` small networks are
/// sampled, estimated, and their graphon estimate rescaled by the
/// degree-based sparsity ratio is used to intervene on the large one. The
/// `graphon` rows use the true sparse graphon of the large network and are
/// reported once per `n` at replication 0.
pub fn run_experiment_transfer(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    expect_experiment(config, ExperimentId::Transfer)?;
    let model = sbm_model(config.base_seed);
    let truth = model.to_step().expect("SBM has a step form");
    let big_n = config.big_n.ok_or_else(|| Error::invalid("transfer experiment needs big_n"))?;
    let big_seed = rng::derive_seed(config.base_seed, "transfer/big");
    let started = Instant::now();
    let big = solve_network(config, &model, big_n, big_seed)?;
    let true_graphon = SpectralGraphon::from_step(&truth.scaled(big.net.rho));
    let baseline = big.gap_row(config, "graphon", &true_graphon, 1.0, 0, big_seed, true_graphon.rank(), started, 0)?;

    let mut rows = Vec::new();
    for &n in &config.n_grid {
        rows.push(ResultRow { n, ..baseline.clone() });
        for rep in 0..config.replications {
            let started = Instant::now();
            let seed = replication_seed(config, n, rep);
            let (small, _) = sample_network(&model, n, config.rho.value(n), seed, false)?;
            let e = estimate(config, &small, seed)?;
            let ratio = estimate_sparsity_ratio(&big.net, &small)?;
            let sg = SpectralGraphon::from_estimate(&e);
            let method = if config.svd_rank.is_some() { "svd" } else { "svt" };
            rows.push(big.gap_row(config, method, &sg, ratio, rep, seed, e.rank(), started, n)?);
        }
    }
    Ok(rows)
}
