use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::LambdaRule;
use crate::games::TransferMode;
use crate::graphon::GraphonModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Holder,
    Sbm,
    Transfer,
    Custom,
}

impl ExperimentId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::Holder => "holder",
            ExperimentId::Sbm => "sbm",
            ExperimentId::Transfer => "transfer",
            ExperimentId::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "holder" => Ok(ExperimentId::Holder),
            "sbm" => Ok(ExperimentId::Sbm),
            "transfer" => Ok(ExperimentId::Transfer),
            "custom" => Ok(ExperimentId::Custom),
            other => Err(Error::invalid(format!("unknown experiment {other:?}"))),
        }
    }
}

/// Sparsity as a function of network size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum RhoRule {
    /// `ρₙ = n^exponent`
    Power { exponent: f64 },
    Fixed { value: f64 },
}

impl RhoRule {
    pub fn value(&self, n: usize) -> f64 {
        match self {
            RhoRule::Power { exponent } => (n as f64).powf(*exponent),
            RhoRule::Fixed { value } => *value,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BudgetRule {
    /// `B = factor · n`
    FractionOfN { factor: f64 },
    Fixed { value: f64 },
}

impl BudgetRule {
    pub fn value(&self, n: usize) -> f64 {
        match self {
            BudgetRule::FractionOfN { factor } => factor * n as f64,
            BudgetRule::Fixed { value } => *value,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub n_grid: Vec<usize>,
    pub rho: RhoRule,
    pub gamma: f64,
    pub budget: BudgetRule,
    pub lambda: LambdaRule,
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Size of the large network in the transfer experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub big_n: Option<usize>,
    /// Fixed-rank truncated SVD instead of thresholding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svd_rank: Option<usize>,
    #[serde(default)]
    pub transfer_mode: TransferMode,
    /// Adds a `wall_time_ms` column; output is then no longer reproducible
    /// byte for byte.
    #[serde(default)]
    pub include_timing: bool,
    /// Graphon for the custom experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<GraphonModel>,
}

pub const DEFAULT_BASE_SEED: u64 = 20_240_501;

fn grid(start: usize, end: usize, step: usize) -> Vec<usize> {
    (start..=end).step_by(step).collect()
}

impl ExperimentConfig {
    /// Reduced grids that finish in minutes on one core.
    pub fn desk(id: ExperimentId) -> Self {
        let mut c = ExperimentConfig {
            experiment: id,
            n_grid: grid(20, 1020, 100),
            rho: RhoRule::Power { exponent: -0.25 },
            gamma: 0.8,
            budget: BudgetRule::FractionOfN { factor: 0.5 },
            lambda: LambdaRule::Experiment,
            replications: 20,
            base_seed: DEFAULT_BASE_SEED,
            output: None,
            big_n: None,
            svd_rank: None,
            transfer_mode: TransferMode::CellAverage,
            include_timing: false,
            model: None,
        };
        match id {
            ExperimentId::Holder | ExperimentId::Custom => {}
            ExperimentId::Sbm => {
                c.n_grid = grid(20, 980, 80);
                c.svd_rank = Some(4);
            }
            ExperimentId::Transfer => {
                c.n_grid = grid(100, 800, 100);
                c.big_n = Some(2000);
            }
        }
        c
    }

    /// The grids and replication counts of the original study.
    pub fn full_scale(id: ExperimentId) -> Self {
        let mut c = Self::desk(id);
        match id {
            ExperimentId::Holder | ExperimentId::Custom => {
                c.n_grid = grid(20, 4920, 100);
                c.replications = 100;
            }
            ExperimentId::Sbm => {
                c.n_grid = grid(20, 980, 20);
                c.replications = 100;
            }
            ExperimentId::Transfer => {
                c.n_grid = grid(100, 1500, 100);
                c.big_n = Some(10_000);
                c.replications = 600;
            }
        }
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::invalid("n_grid is empty"));
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("n_grid must increase strictly"));
        }
        if self.n_grid[0] < 2 {
            return Err(Error::invalid("networks need at least two nodes"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid(format!("gamma = {} must be positive", self.gamma)));
        }
        let mut sizes = self.n_grid.clone();
        if let Some(big) = self.big_n {
            sizes.push(big);
        }
        for &n in &sizes {
            let rho = self.rho.value(n);
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::invalid(format!("rho rule gives {rho} at n = {n}")));
            }
            let b = self.budget.value(n);
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::invalid(format!("budget rule gives {b} at n = {n}")));
            }
        }
        if let LambdaRule::Fixed { value } = self.lambda {
            if !(value >= 0.0) {
                return Err(Error::invalid("lambda must be nonnegative"));
            }
        }
        if let Some(r) = self.svd_rank {
            if r == 0 || r > self.n_grid[0] {
                return Err(Error::invalid(format!("svd_rank {r} must lie in 1..={}", self.n_grid[0])));
            }
        }
        match self.experiment {
            ExperimentId::Transfer => match self.big_n {
                Some(big) if big >= 2 => {}
                _ => return Err(Error::invalid("transfer experiment needs big_n >= 2")),
            },
            ExperimentId::Custom => match &self.model {
                Some(m) => m.validate()?,
                None => return Err(Error::invalid("custom experiment needs a model")),
            },
            _ => {}
        }
        Ok(())
    }
}
