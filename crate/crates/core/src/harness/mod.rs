//! Seeded Monte-Carlo experiments on intervention quality, their summaries
//! and CSV output.

mod config;
mod run;
mod summary;

pub use config::{BudgetRule, ExperimentConfig, ExperimentId, RhoRule, DEFAULT_BASE_SEED};
pub use run::{
    run_experiment, run_experiment_holder, run_experiment_sbm, run_experiment_transfer, sbm_blocks, sbm_model,
    sort_rows, ResultRow, SCHEMA_VERSION,
};
pub use summary::{percentile, read_rows, summarize, write_rows, write_rows_to_path, write_summary, SummaryRow};
