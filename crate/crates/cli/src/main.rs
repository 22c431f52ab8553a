use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;

use graphon_core::estimator::{svt, truncated_estimate, LambdaRule};
use graphon_core::games::{
    optimal_intervention, optimal_intervention_cg, CgOptions, InterventionRecord, NetworkGame, DENSE_EIGEN_MAX,
};
use graphon_core::graphon::{load_network, sample_network, save_network, GraphonModel};
use graphon_core::harness::{
    read_rows, run_experiment, sbm_model, summarize, write_rows, write_rows_to_path, write_summary, BudgetRule,
    ExperimentConfig, ExperimentId, RhoRule, DEFAULT_BASE_SEED,
};
use graphon_core::{Error, Result};

#[derive(Parser)]
#[command(name = "graphon", version, about = "Graphon estimation and targeted interventions in network games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a network and write `<out>.edges` plus `<out>.json`.
    Sample {
        /// `holder`, `sbm`, `constant=<c>`, or a JSON model file.
        #[arg(long, default_value = "holder")]
        model: String,
        #[arg(long)]
        n: usize,
        /// Defaults to n^-0.25.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BASE_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Threshold the adjacency of a saved network and write the estimate as JSON.
    Estimate {
        /// Stem of a network written by `sample`.
        #[arg(long)]
        network: PathBuf,
        /// `theory` (6√(nρ)), `experiment` (2√(nρ)) or a number.
        #[arg(long, default_value = "theory")]
        lambda: String,
        /// Keep a fixed number of components instead of thresholding.
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal intervention on a saved network with θᵢ = ξ₍ᵢ₎².
    Intervene {
        #[arg(long)]
        network: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        gamma: f64,
        /// Defaults to n/2.
        #[arg(long)]
        budget: Option<f64>,
        /// JSON array to use instead of the squared latent positions.
        #[arg(long)]
        theta: Option<PathBuf>,
        /// Matrix-free path (Lanczos + conjugate gradients).
        #[arg(long)]
        cg: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the Monte-Carlo experiments and write per-replication rows.
    Experiment {
        #[arg(value_parser = ["holder", "sbm", "transfer", "custom"])]
        which: String,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Median and 5/95 percentiles of the gap per experiment, method and n.
    Summarize {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Overrides {
    /// JSON file mirroring the experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the grids and replication counts of the original study.
    #[arg(long)]
    full_scale: bool,
    /// Comma-separated grid of network sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Fixed sparsity instead of n^-0.25.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Fixed budget instead of n/2.
    #[arg(long)]
    budget: Option<f64>,
    /// Fixed threshold instead of 2√(nρ).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add a wall_time_ms column (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        3
    } else if matches!(e, Error::Io(_)) {
        1
    } else {
        2
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample { model, n, rho, seed, out } => {
            let model = parse_model(&model)?;
            let rho = rho.unwrap_or_else(|| (n as f64).powf(-0.25));
            let (net, _) = sample_network(&model, n, rho, seed, false)?;
            save_network(&net, &out)?;
            eprintln!("{} nodes, {} edges -> {}", net.n, net.edge_count(), out.with_extension("edges").display());
            Ok(())
        }
        Command::Estimate { network, lambda, rank, seed, out } => {
            let net = load_network(&network)?;
            let a = net.adjacency.as_mat_ops();
            let est = match rank {
                Some(r) => truncated_estimate(a, r, seed)?,
                None => {
                    let mut e = svt(a, parse_lambda(&lambda)?.value(net.n, net.rho), seed)?;
                    e.rho_used = Some(net.rho);
                    e
                }
            };
            eprintln!("rank {} at lambda {}", est.rank(), est.lambda);
            emit_json(&est, out.as_deref())
        }
        Command::Intervene { network, gamma, budget, theta, cg, out } => {
            let net = load_network(&network)?;
            let theta = match theta {
                Some(path) => {
                    let v: Vec<f64> = serde_json::from_reader(BufReader::new(File::open(path)?))?;
                    DVector::from_vec(v)
                }
                None => DVector::from_iterator(net.n, net.xi.iter().map(|x| x * x)),
            };
            let budget = budget.unwrap_or(net.n as f64 / 2.0);
            let game = NetworkGame::new(net.adjacency.clone(), gamma, theta)?;
            let sol = if cg || net.n > DENSE_EIGEN_MAX {
                optimal_intervention_cg(&game, budget, &CgOptions::default())?
            } else {
                optimal_intervention(&game, budget)?
            };
            let record = InterventionRecord::new(&game, budget, &sol, Some(network.display().to_string()));
            emit_json(&record, out.as_deref())
        }
        Command::Experiment { which, overrides } => {
            let id: ExperimentId = which.parse()?;
            let config = build_config(id, &overrides)?;
            let rows = run_experiment(&config)?;
            match &config.output {
                Some(path) => {
                    write_rows_to_path(&rows, path)?;
                    eprintln!("{} rows -> {}", rows.len(), path.display());
                }
                None => write_rows(&rows, io::stdout().lock())?,
            }
            Ok(())
        }
        Command::Summarize { input, out } => {
            let rows = read_rows(BufReader::new(File::open(input)?))?;
            let summary = summarize(&rows)?;
            match out {
                Some(path) => write_summary(&summary, BufWriter::new(File::create(path)?)),
                None => write_summary(&summary, io::stdout().lock()),
            }
        }
    }
}

fn build_config(id: ExperimentId, o: &Overrides) -> Result<ExperimentConfig> {
    let mut c = match &o.config {
        Some(path) => {
            let c = ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?;
            if c.experiment != id {
                return Err(Error::InvalidArgument(format!(
                    "config file is for {}, command asked for {}",
                    c.experiment.as_str(),
                    id.as_str()
                )));
            }
            c
        }
        None if o.full_scale => ExperimentConfig::full_scale(id),
        None => ExperimentConfig::desk(id),
    };
    if let Some(n) = &o.n {
        c.n_grid = n.clone();
    }
    if let Some(rho) = o.rho {
        c.rho = RhoRule::Fixed { value: rho };
    }
    if let Some(g) = o.gamma {
        c.gamma = g;
    }
    if let Some(b) = o.budget {
        c.budget = BudgetRule::Fixed { value: b };
    }
    if let Some(l) = o.lambda {
        c.lambda = LambdaRule::Fixed { value: l };
    }
    if let Some(s) = o.seed {
        c.base_seed = s;
    }
    if let Some(r) = o.reps {
        c.replications = r;
    }
    if let Some(out) = &o.out {
        c.output = Some(out.clone());
    }
    c.include_timing |= o.timing;
    c.validate()?;
    Ok(c)
}

fn parse_model(spec: &str) -> Result<GraphonModel> {
    match spec {
        "holder" => Ok(GraphonModel::sqrt_abs_diff()),
        "sbm" => Ok(sbm_model(DEFAULT_BASE_SEED)),
        _ => {
            if let Some(c) = spec.strip_prefix("constant=") {
                let c: f64 = c.parse().map_err(|_| Error::InvalidArgument(format!("bad constant {c:?}")))?;
                let m = GraphonModel::constant(c);
                m.validate()?;
                return Ok(m);
            }
            let m: GraphonModel = serde_json::from_reader(BufReader::new(File::open(spec)?))?;
            m.validate()?;
            Ok(m)
        }
    }
}

fn parse_lambda(s: &str) -> Result<LambdaRule> {
    match s {
        "theory" => Ok(LambdaRule::Theory),
        "experiment" => Ok(LambdaRule::Experiment),
        _ => s
            .parse()
            .map(|value| LambdaRule::Fixed { value })
            .map_err(|_| Error::InvalidArgument(format!("bad lambda {s:?}"))),
    }
}

fn emit_json<T: serde::Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            serde_json::to_writer(&mut w, value)?;
            w.flush()?;
        }
        None => {
            let mut w = io::stdout().lock();
            serde_json::to_writer(&mut w, value)?;
            writeln!(w)?;
        }
    }
    Ok(())
}
