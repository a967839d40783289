use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use refaas_core::energy::{
    amortization, AmortizationReport, ConversionMetrics, FunctionMetrics, GateDecision,
};
use refaas_core::pipeline::{JobReport, JobState, StageKind, StageStatus, Verdict};
use refaas_core::LanguageId;
use serde::{Deserialize, Serialize};

use crate::store::{write_atomic, ArtifactKind};
use crate::ServiceError;

/// Per-job overrides accepted next to the package and tests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobOptions {
    pub pipeline: Option<String>,
    pub target_language: Option<LanguageId>,
    pub priority: i64,
    pub benchmark_invocations: Option<u32>,
    pub benchmark_repetitions: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CallbackState {
    Pending,
    Delivered,
    Undelivered,
}

/// Where the platform wants to hear about the outcome of a hook job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HookContext {
    pub function: String,
    pub namespace: Option<String>,
    pub callback_url: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallbackStatus {
    pub state: CallbackState,
    pub attempts: u32,
    pub last_error: Option<String>,
}

/// Persistent state of one submitted job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub id: String,
    pub pipeline: String,
    pub source_language: LanguageId,
    pub target_language: LanguageId,
    pub priority: i64,
    pub benchmark_invocations: u32,
    pub benchmark_repetitions: u32,
    pub state: JobState,
    pub submitted_at: f64,
    pub started_at: Option<f64>,
    pub finished_at: Option<f64>,
    /// Set when the job ended without running the pipeline to its end.
    pub error: Option<String>,
    pub report: Option<JobReport>,
    pub hook: Option<HookContext>,
    pub callback: Option<CallbackStatus>,
}

impl JobRecord {
    pub fn verdict(&self) -> Option<Verdict> {
        match (&self.report, self.state.is_terminal()) {
            (Some(r), _) => r.verdict,
            (None, true) => Some(Verdict::OriginalKept),
            (None, false) => None,
        }
    }

    /// Which stored archive [`fetch_artifact`](crate::Service::artifact)
    /// hands out once the job is terminal.
    pub fn artifact_kind(&self) -> ArtifactKind {
        if self.verdict() == Some(Verdict::Translated) {
            ArtifactKind::Translated
        } else {
            ArtifactKind::Original
        }
    }

    pub fn view(&self, artifact_digest: Option<String>) -> JobView {
        let report = self.report.as_ref();
        let benchmarks = report
            .and_then(|r| r.benchmarks.as_ref())
            .map(|b| b.gate.clone());
        let metrics = report.map(|r| r.metrics.clone()).unwrap_or_default();
        let amortization = benchmarks.as_ref().map(|g| {
            amortization(
                metrics.energy_joules(),
                g.original_joules_per_invocation - g.translated_joules_per_invocation,
            )
        });
        JobView {
            job_id: self.id.clone(),
            state: self.state,
            verdict: self.verdict(),
            detail: report
                .map(|r| r.detail.clone())
                .or_else(|| self.error.clone())
                .unwrap_or_default(),
            pipeline: self.pipeline.clone(),
            source_language: self.source_language.clone(),
            target_language: self.target_language.clone(),
            priority: self.priority,
            submitted_at: self.submitted_at,
            started_at: self.started_at,
            finished_at: self.finished_at,
            trace: report
                .map(|r| {
                    r.trace
                        .iter()
                        .map(|o| TraceEntry {
                            stage: o.stage.clone(),
                            kind: o.kind,
                            attempt: o.attempt,
                            result: o.result,
                            detail: o.detail.clone(),
                            duration: o.duration,
                            tokens: o
                                .llm_exchange
                                .as_ref()
                                .map(|e| e.total_tokens())
                                .unwrap_or(0),
                        })
                        .collect()
                })
                .unwrap_or_default(),
            metrics,
            function_metrics: report.and_then(|r| r.function_metrics.clone()),
            regression_gate: benchmarks,
            amortization,
            artifact: artifact_digest.map(|digest| ArtifactRef {
                kind: self.artifact_kind(),
                digest,
            }),
            callback: self.callback.clone(),
        }
    }
}

/// One stage execution as shown in a status response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub stage: String,
    pub kind: StageKind,
    pub attempt: u32,
    pub result: StageStatus,
    pub detail: String,
    pub duration: f64,
    pub tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub kind: ArtifactKind,
    pub digest: String,
}

/// Status response of `GET /v1/jobs/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    pub job_id: String,
    pub state: JobState,
    pub verdict: Option<Verdict>,
    pub detail: String,
    pub pipeline: String,
    pub source_language: LanguageId,
    pub target_language: LanguageId,
    pub priority: i64,
    pub submitted_at: f64,
    pub started_at: Option<f64>,
    pub finished_at: Option<f64>,
    pub trace: Vec<TraceEntry>,
    pub metrics: ConversionMetrics,
    pub function_metrics: Option<FunctionMetrics>,
    pub regression_gate: Option<GateDecision>,
    /// Present once both functions were benchmarked.
    pub amortization: Option<AmortizationReport>,
    /// Archive that the artifact endpoint returns, once the job is terminal.
    pub artifact: Option<ArtifactRef>,
    pub callback: Option<CallbackStatus>,
}

/// Job records as one JSON file per job.
pub(crate) struct RecordDir {
    dir: PathBuf,
}

impl RecordDir {
    pub fn open(dir: &Path) -> Result<Self, ServiceError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    pub fn save(&self, record: &JobRecord) -> Result<(), ServiceError> {
        let bytes =
            serde_json::to_vec_pretty(record).map_err(|e| ServiceError::Store(e.to_string()))?;
        write_atomic(&self.dir.join(format!("{}.json", record.id)), &bytes)?;
        Ok(())
    }

    pub fn remove(&self, id: &str) -> Result<(), ServiceError> {
        match fs::remove_file(self.dir.join(format!("{id}.json"))) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e.into()),
            _ => Ok(()),
        }
    }

    pub fn load_all(&self) -> Result<HashMap<String, JobRecord>, ServiceError> {
        let mut out = HashMap::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let bytes = fs::read(&path)?;
                let record: JobRecord = serde_json::from_slice(&bytes)
                    .map_err(|e| ServiceError::Store(format!("{}: {e}", path.display())))?;
                out.insert(record.id.clone(), record);
            }
        }
        Ok(out)
    }
}
