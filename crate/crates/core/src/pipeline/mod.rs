//! Declarative staged translation pipelines: spec loading, the engine that
//! drives a job through the stages, and the standard stage executors.

mod engine;
mod executors;
mod meter;
mod spec;

use thiserror::Error;

pub use engine::{
    run_pipeline, BenchmarkPair, Candidate, ExecutorRegistry, JobContext, JobReport, JobState,
    PipelineServices, StageExecutor, StageOutcome, StageResult, StageStatus, TranslationJob,
    Verdict,
};
pub use executors::{
    BenchmarkExecutor, BuildExecutor, LlmExecutor, PrecheckExecutor, StandardExecutors,
    TestExecutor,
};
pub use meter::{ConversionMeter, MeterSession};
pub use spec::{
    load_pipeline_spec, Defaults, Gates, OnFail, PipelineCatalog, PipelineSpec, RegressionGate,
    StageKind, StageSpec, PRECHECK_STAGE, REGRESSION_STAGE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("pipeline schema error: {0}")]
    SchemaError(String),
    #[error("unbounded recovery: {0}")]
    UnboundedRecovery(String),
    #[error("unknown pipeline `{0}`")]
    UnknownPipeline(String),
    #[error("no executor registered for stage kind `{0}`")]
    ExecutorMissing(StageKind),
    #[error("job is {0:?}, not queued")]
    NotQueued(JobState),
    #[error("i/o: {0}")]
    Io(String),
}
