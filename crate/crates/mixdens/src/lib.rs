//! Experiment runner, file formats and command line for the projection
//! estimators of `mixdens-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;

pub use error::{AppError, AppResult};
pub use experiment::{
    rate_table, run_experiment, variance_condition_audit, AuditRow, CellSummary, ExperimentConfig,
    ExperimentReport, OrderChoice, RateRow, Replication,
};
