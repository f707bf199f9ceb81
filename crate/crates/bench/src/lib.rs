//! Benchmark harness for regex composition strategies.

pub mod report;
pub mod run;
pub mod sampling;
pub mod stats;
pub mod strategy;
pub mod task;

use thiserror::Error;

pub use report::{aggregate, Report, StrategyReport};
pub use run::{run_strategy, run_task, RunConfig, TaskRecord};
pub use sampling::{
    cochran_sample_size, draw_samples, neyman_allocation, plan_samples, stratify, z_for_confidence,
    SamplePlan, SampleSpec, StratumInput, StratumKey,
};
pub use strategy::{Composition, ExternalStrategy, ReuseStrategy, Strategy};
pub use task::{load_tasks, write_tasks, CompositionTask, ExclusionReason, LoadReport, TaskSource};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("duplicate task id {0:?}")]
    DuplicateTask(String),
    #[error("{0}")]
    Domain(String),
    #[error("infeasible sample: {0}")]
    Infeasible(String),
}
