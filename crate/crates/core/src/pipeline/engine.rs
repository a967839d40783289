use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::meter::ConversionMeter;
use super::spec::{Defaults, OnFail, PipelineSpec, StageKind, StageSpec};
use super::PipelineError;
use crate::bench::BenchmarkReport;
use crate::energy::{ConversionMetrics, FunctionMetrics, GateDecision};
use crate::llm::LlmExchange;
use crate::model::{DeploymentPackage, JobSpec, LanguageId};
use crate::runner::{Artifact, ValidationSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Queued,
    Running,
    Succeeded,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Succeeded | Self::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Translated,
    OriginalKept,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Pass,
    Fail,
}

/// What an executor reports for one attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub passed: bool,
    pub detail: String,
    pub artifacts: BTreeMap<String, String>,
    pub llm_exchange: Option<LlmExchange>,
}

impl StageResult {
    pub fn pass(detail: impl Into<String>) -> Self {
        Self {
            passed: true,
            detail: detail.into(),
            artifacts: BTreeMap::new(),
            llm_exchange: None,
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Self {
            passed: false,
            ..Self::pass(detail)
        }
    }

    pub fn with_artifact(mut self, name: impl Into<String>, content: impl Into<String>) -> Self {
        self.artifacts.insert(name.into(), content.into());
        self
    }

    pub fn with_exchange(mut self, exchange: LlmExchange) -> Self {
        self.llm_exchange = Some(exchange);
        self
    }
}

/// One recorded stage execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: String,
    pub kind: StageKind,
    /// 1-based, counted per stage over the whole run.
    pub attempt: u32,
    pub result: StageStatus,
    pub detail: String,
    /// Text artifacts such as extracted sources, build logs and test reports.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub artifacts: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub llm_exchange: Option<LlmExchange>,
    /// Seconds.
    pub duration: f64,
}

/// A translation candidate produced by a code-generating stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Increases with every new candidate of the job, starting at 1.
    pub rev: u32,
    pub source: String,
    pub package: DeploymentPackage,
}

/// Benchmarks of the original and one candidate revision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkPair {
    pub rev: u32,
    pub original: BenchmarkReport,
    pub translated: BenchmarkReport,
    pub gate: GateDecision,
}

/// Mutable state of one job, shared by its stage executors.
#[derive(Debug)]
pub struct JobContext {
    pub job_id: String,
    pub spec: JobSpec,
    pub defaults: Defaults,
    pub workdir: PathBuf,
    /// Output of the documenting stage.
    pub documented: Option<String>,
    pub candidate: Option<Candidate>,
    /// Last successful build and the candidate revision it was built from.
    pub built: Option<(u32, Artifact)>,
    /// Last test run and the candidate revision it ran against.
    pub tested: Option<(u32, ValidationSummary)>,
    pub original_artifact: Option<Artifact>,
    pub original_validation: Option<ValidationSummary>,
    /// Feedback for the next repair prompt (build log or test failures).
    pub last_error: Option<String>,
    pub benchmarks: Option<BenchmarkPair>,
    sandboxes: u32,
}

impl JobContext {
    pub fn new(
        job_id: impl Into<String>,
        spec: JobSpec,
        defaults: Defaults,
        workdir: PathBuf,
    ) -> Self {
        Self {
            job_id: job_id.into(),
            spec,
            defaults,
            workdir,
            documented: None,
            candidate: None,
            built: None,
            tested: None,
            original_artifact: None,
            original_validation: None,
            last_error: None,
            benchmarks: None,
            sandboxes: 0,
        }
    }

    /// Installs a new candidate and returns its revision.
    pub fn set_candidate(&mut self, source: String, package: DeploymentPackage) -> u32 {
        let rev = self.candidate.as_ref().map_or(1, |c| c.rev + 1);
        self.candidate = Some(Candidate {
            rev,
            source,
            package,
        });
        rev
    }

    pub fn candidate_rev(&self) -> Option<u32> {
        self.candidate.as_ref().map(|c| c.rev)
    }

    /// Entrypoint source of the original package.
    pub fn source_code(&self) -> String {
        self.spec
            .source_package
            .entrypoint_source()
            .unwrap_or_default()
            .to_string()
    }

    /// A fresh, not yet existing directory below the job's workdir.
    pub fn sandbox(&mut self, label: &str) -> PathBuf {
        self.sandboxes += 1;
        self.workdir.join(format!("{:02}-{label}", self.sandboxes))
    }

    /// The artifact built from the current candidate, if any.
    pub fn current_artifact(&self) -> Option<&Artifact> {
        match (&self.built, self.candidate_rev()) {
            (Some((rev, artifact)), Some(current)) if *rev == current => Some(artifact),
            _ => None,
        }
    }
}

/// Runs stages of one kind.
pub trait StageExecutor: Send + Sync {
    fn execute(&self, stage: &StageSpec, ctx: &mut JobContext, attempt: u32) -> StageResult;
}

#[derive(Clone, Default)]
pub struct ExecutorRegistry {
    executors: HashMap<StageKind, Arc<dyn StageExecutor>>,
}

impl ExecutorRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(mut self, kind: StageKind, executor: Arc<dyn StageExecutor>) -> Self {
        self.executors.insert(kind, executor);
        self
    }

    pub fn get(&self, kind: StageKind) -> Option<&Arc<dyn StageExecutor>> {
        self.executors.get(&kind)
    }
}

/// Everything a pipeline run needs besides the job and its spec.
pub struct PipelineServices {
    pub executors: ExecutorRegistry,
    pub meter: ConversionMeter,
    /// Parent of per-job work directories.
    pub sandbox_root: PathBuf,
    /// Keep each job's work directory instead of deleting it.
    pub keep_workdir: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationJob {
    pub id: String,
    pub spec: JobSpec,
    pub state: JobState,
    pub trace: Vec<StageOutcome>,
    pub verdict: Option<Verdict>,
    pub output_package: Option<DeploymentPackage>,
    pub metrics: ConversionMetrics,
    pub function_metrics: Option<FunctionMetrics>,
    /// Why the job ended the way it did.
    pub detail: String,
    pub benchmarks: Option<BenchmarkPair>,
    pub workdir: Option<PathBuf>,
}

/// The serializable part of a job: everything except its packages and suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub id: String,
    pub pipeline: String,
    pub source_language: LanguageId,
    pub target_language: LanguageId,
    pub state: JobState,
    pub verdict: Option<Verdict>,
    pub detail: String,
    pub trace: Vec<StageOutcome>,
    pub metrics: ConversionMetrics,
    pub function_metrics: Option<FunctionMetrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub benchmarks: Option<BenchmarkPair>,
}

impl TranslationJob {
    pub fn new(spec: JobSpec) -> Self {
        Self::with_id(uuid::Uuid::new_v4().to_string(), spec)
    }

    pub fn with_id(id: impl Into<String>, spec: JobSpec) -> Self {
        Self {
            id: id.into(),
            spec,
            state: JobState::Queued,
            trace: Vec::new(),
            verdict: None,
            output_package: None,
            metrics: ConversionMetrics::default(),
            function_metrics: None,
            detail: String::new(),
            benchmarks: None,
            workdir: None,
        }
    }

    pub fn report(&self) -> JobReport {
        JobReport {
            id: self.id.clone(),
            pipeline: self.spec.pipeline.clone(),
            source_language: self.spec.source_language().clone(),
            target_language: self.spec.target_language.clone(),
            state: self.state,
            verdict: self.verdict,
            detail: self.detail.clone(),
            trace: self.trace.clone(),
            metrics: self.metrics.clone(),
            function_metrics: self.function_metrics.clone(),
            benchmarks: self.benchmarks.clone(),
        }
    }
}

enum End {
    Completed,
    Aborted(String),
    AcceptedOriginal(String),
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".to_string())
}

fn first_line(text: &str) -> &str {
    text.lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .trim()
}

/// Drives a queued job through the pipeline until it is terminal.
///
/// Every stage execution is recorded in the trace and counts against the
/// attempt budget. A failing stage either retries, jumps to its recovery
/// stage, or ends the run; a run that ends early keeps the original package.
/// The translation is only accepted when the newest candidate was built,
/// passed the tests and, if the plan has a regression gate, passed it.
pub fn run_pipeline(
    mut job: TranslationJob,
    pipeline: &PipelineSpec,
    services: &PipelineServices,
) -> Result<TranslationJob, PipelineError> {
    if job.state != JobState::Queued {
        return Err(PipelineError::NotQueued(job.state));
    }
    let plan = pipeline.plan();
    for stage in &plan {
        if services.executors.get(stage.kind).is_none() {
            return Err(PipelineError::ExecutorMissing(stage.kind));
        }
    }
    fs::create_dir_all(&services.sandbox_root).map_err(|e| PipelineError::Io(e.to_string()))?;
    let workdir = tempfile::Builder::new()
        .prefix(&format!("job-{}-", job.id))
        .tempdir_in(&services.sandbox_root)
        .map_err(|e| PipelineError::Io(e.to_string()))?;

    job.state = JobState::Running;
    let session = services.meter.start();
    let mut ctx = JobContext::new(
        job.id.clone(),
        job.spec.clone(),
        pipeline.defaults.clone(),
        workdir.path().to_path_buf(),
    );

    let index: HashMap<&str, usize> = plan
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    let next_forward = |from: usize| (from + 1..plan.len()).find(|&i| !plan[i].recovery);
    let has_benchmark = plan.iter().any(|s| s.kind == StageKind::Benchmark);
    let mut attempts = vec![0u32; plan.len()];
    let mut executions = 0u32;
    let mut tokens = 0u64;
    let (mut built_rev, mut tested_rev, mut regression_rev) = (None, None, None);
    let mut resume: Option<usize> = None;
    let mut pos = (0..plan.len()).find(|&i| !plan[i].recovery).unwrap_or(0);

    let end = loop {
        let stage = &plan[pos];
        if attempts[pos] >= stage.max_attempts {
            break End::Aborted(format!("stage `{}` has no attempts left", stage.name));
        }
        if executions >= pipeline.global_attempt_budget {
            break End::Aborted(format!(
                "attempt budget of {} executions exhausted",
                pipeline.global_attempt_budget
            ));
        }
        attempts[pos] += 1;
        executions += 1;
        let attempt = attempts[pos];
        let executor = services.executors.get(stage.kind).expect("checked above");
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| {
            executor.execute(stage, &mut ctx, attempt)
        }))
        .unwrap_or_else(|p| StageResult::fail(format!("executor panicked: {}", panic_message(p))));
        if let Some(ex) = &result.llm_exchange {
            tokens += ex.total_tokens();
        }
        if result.passed {
            let rev = ctx.candidate_rev();
            match stage.kind {
                StageKind::Build => built_rev = rev,
                StageKind::Test => tested_rev = rev,
                StageKind::Benchmark => regression_rev = rev,
                _ => {}
            }
        }
        tracing::debug!(job = %job.id, stage = %stage.name, attempt, passed = result.passed, "stage finished");
        job.trace.push(StageOutcome {
            stage: stage.name.clone(),
            kind: stage.kind,
            attempt,
            result: if result.passed {
                StageStatus::Pass
            } else {
                StageStatus::Fail
            },
            detail: result.detail.clone(),
            artifacts: result.artifacts,
            llm_exchange: result.llm_exchange,
            duration: started.elapsed().as_secs_f64(),
        });

        if result.passed {
            let next = if stage.recovery {
                stage
                    .then
                    .as_deref()
                    .map(|t| index[t])
                    .or(resume.take())
                    .or_else(|| next_forward(pos))
            } else {
                next_forward(pos)
            };
            match next {
                Some(n) => pos = n,
                None => break End::Completed,
            }
            continue;
        }

        let reason = format!(
            "stage `{}` failed on attempt {attempt}: {}",
            stage.name,
            first_line(&result.detail)
        );
        let attempts_left = attempt < stage.max_attempts;
        match &stage.on_fail {
            OnFail::Recover(target) => {
                let t = index[target.as_str()];
                if attempts_left && attempts[t] < plan[t].max_attempts {
                    resume = Some(pos);
                    pos = t;
                } else {
                    break End::Aborted(reason);
                }
            }
            OnFail::Abort if attempts_left => {}
            OnFail::Abort => break End::Aborted(reason),
            OnFail::AcceptOriginal if attempts_left => {}
            OnFail::AcceptOriginal => break End::AcceptedOriginal(reason),
        }
    };

    let current = ctx.candidate_rev();
    let verified = current.is_some()
        && built_rev == current
        && tested_rev == current
        && (!has_benchmark || regression_rev == current);
    let (state, verdict, detail) = match end {
        End::Completed if verified => (
            JobState::Succeeded,
            Verdict::Translated,
            "translation verified".to_string(),
        ),
        End::Completed => (
            JobState::Succeeded,
            Verdict::OriginalKept,
            "pipeline finished without a verified translation".to_string(),
        ),
        End::Aborted(why) => (JobState::Failed, Verdict::OriginalKept, why),
        End::AcceptedOriginal(why) => (JobState::Succeeded, Verdict::OriginalKept, why),
    };
    job.output_package = Some(match (verdict, &ctx.candidate) {
        (Verdict::Translated, Some(c)) => c.package.clone(),
        _ => job.spec.source_package.clone(),
    });

    let mut metrics = session.finish();
    metrics.tokens = tokens;
    job.metrics = metrics;
    let tested = ctx
        .tested
        .as_ref()
        .filter(|(rev, _)| Some(*rev) == current)
        .map(|(_, s)| s);
    let pair = ctx.benchmarks.as_ref().filter(|b| Some(b.rev) == current);
    let stats = pair.map(|b| (b.original.stats(), b.translated.stats()));
    job.function_metrics = Some(FunctionMetrics::new(
        current.is_some() && built_rev == current,
        tested,
        stats.as_ref().map(|(o, t)| (o, t)),
    ));
    job.benchmarks = ctx.benchmarks.take();
    job.state = state;
    job.verdict = Some(verdict);
    job.detail = detail;
    if services.keep_workdir {
        job.workdir = Some(workdir.keep());
    }
    Ok(job)
}
