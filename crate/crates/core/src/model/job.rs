use thiserror::Error;

use super::{DeploymentPackage, LanguageId, TestSuite};

pub const DEFAULT_BENCHMARK_INVOCATIONS: u32 = 1000;
pub const DEFAULT_BENCHMARK_REPETITIONS: u32 = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JobSpecError {
    #[error("target language `{0}` equals the source language")]
    SameLanguage(LanguageId),
    #[error("benchmark invocations must be positive")]
    ZeroInvocations,
    #[error("benchmark repetitions must be positive")]
    ZeroRepetitions,
}

/// A translation request: what to translate, into which language, how to
/// validate it and which pipeline to run.
#[derive(Debug, Clone, PartialEq)]
pub struct JobSpec {
    pub source_package: DeploymentPackage,
    pub target_language: LanguageId,
    pub suite: TestSuite,
    pub pipeline: String,
    pub benchmark_invocations: u32,
    pub benchmark_repetitions: u32,
}

impl JobSpec {
    pub fn new(
        source_package: DeploymentPackage,
        target_language: LanguageId,
        suite: TestSuite,
    ) -> Result<Self, JobSpecError> {
        if &target_language == source_package.language() {
            return Err(JobSpecError::SameLanguage(target_language));
        }
        Ok(Self {
            source_package,
            target_language,
            suite,
            pipeline: "cot".to_string(),
            benchmark_invocations: DEFAULT_BENCHMARK_INVOCATIONS,
            benchmark_repetitions: DEFAULT_BENCHMARK_REPETITIONS,
        })
    }

    pub fn with_pipeline(mut self, name: impl Into<String>) -> Self {
        self.pipeline = name.into();
        self
    }

    pub fn with_benchmark(
        mut self,
        invocations: u32,
        repetitions: u32,
    ) -> Result<Self, JobSpecError> {
        if invocations == 0 {
            return Err(JobSpecError::ZeroInvocations);
        }
        if repetitions == 0 {
            return Err(JobSpecError::ZeroRepetitions);
        }
        self.benchmark_invocations = invocations;
        self.benchmark_repetitions = repetitions;
        Ok(self)
    }

    pub fn source_language(&self) -> &LanguageId {
        self.source_package.language()
    }
}
