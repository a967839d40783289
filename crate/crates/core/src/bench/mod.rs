//! Closed-loop micro-benchmarks of paired function implementations and the
//! savings table derived from them.

mod harness;
mod savings;

use thiserror::Error;

use crate::energy::EnergyError;

pub use harness::{
    event_schedule, run_benchmark, AggregateStats, BenchmarkConfig, BenchmarkReport, MeanStd,
    RepetitionStats, DEFAULT_WARMUP_INVOCATIONS,
};
pub use savings::{repetitions_csv, savings_csv, savings_report, SavingsRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("benchmark needs at least one event")]
    NoEvents,
    #[error("artifact failed at invocation {index}: {detail}")]
    ArtifactCrash { index: u64, detail: String },
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        Self::Csv(e.to_string())
    }
}
