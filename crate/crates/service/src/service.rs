use std::collections::HashMap;
use std::fmt::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use base64::Engine as _;
use refaas_core::pipeline::{run_pipeline, JobState, TranslationJob, Verdict};
use refaas_core::{
    parse_package_with, parse_test_archive, serialize_package, serialize_test_archive, JobSpec,
    PackageError, TestSuite,
};

use crate::config::ServiceConfig;
use crate::hook::{deliver, BuildEvent, CallbackPayload, HookAction, HookResponse};
use crate::queue::{unix_now, JobQueue, JobQueueEntry};
use crate::records::{
    CallbackState, CallbackStatus, HookContext, JobOptions, JobRecord, JobView, RecordDir,
};
use crate::runtime::Runtime;
use crate::store::{ArtifactKind, ArtifactStore, ArtifactStoreRecord};
use crate::ServiceError;

/// The job service: queue, worker pool, artifact store and job records.
pub struct Service {
    cfg: ServiceConfig,
    runtime: Runtime,
    queue: JobQueue,
    store: ArtifactStore,
    records: RecordDir,
    jobs: Mutex<HashMap<String, JobRecord>>,
    changed: Condvar,
    workers: Mutex<Vec<JoinHandle<()>>>,
    callbacks: Mutex<Vec<JoinHandle<()>>>,
}

impl Service {
    /// Opens the data directory and requeues every job that had not finished
    /// when the previous process stopped. Workers are not started.
    pub fn open(cfg: ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        cfg.validate()?;
        let runtime = Runtime::build(&cfg)?;
        let store = ArtifactStore::open(&cfg.data_dir.join("store"))?;
        let records = RecordDir::open(&cfg.data_dir.join("jobs"))?;
        let mut jobs = records.load_all()?;
        let queue = JobQueue::new(cfg.queue_bound);

        let mut pending: Vec<&mut JobRecord> = jobs
            .values_mut()
            .filter(|r| !r.state.is_terminal())
            .collect();
        pending.sort_by(|a, b| a.submitted_at.total_cmp(&b.submitted_at));
        for record in pending {
            record.state = JobState::Queued;
            record.started_at = None;
            records.save(record)?;
            queue.restore(JobQueueEntry {
                job_id: record.id.clone(),
                enqueue_time: record.submitted_at,
                priority: record.priority,
            });
        }
        if !queue.is_empty() {
            tracing::info!(jobs = queue.len(), "requeued unfinished jobs");
        }

        Ok(Arc::new(Self {
            cfg,
            runtime,
            queue,
            store,
            records,
            jobs: Mutex::new(jobs),
            changed: Condvar::new(),
            workers: Mutex::new(Vec::new()),
            callbacks: Mutex::new(Vec::new()),
        }))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    pub fn runtime(&self) -> &Runtime {
        &self.runtime
    }

    /// Starts the worker pool and retries callbacks that were still pending.
    pub fn start_workers(self: &Arc<Self>) {
        let mut workers = self.workers.lock().unwrap();
        for n in 0..self.cfg.workers {
            let svc = self.clone();
            let handle = thread::Builder::new()
                .name(format!("refaas-worker-{n}"))
                .spawn(move || {
                    while let Some(entry) = svc.queue.pop() {
                        svc.process(&entry.job_id);
                    }
                })
                .expect("spawn worker");
            workers.push(handle);
        }
        drop(workers);
        let pending: Vec<String> = self
            .jobs
            .lock()
            .unwrap()
            .values()
            .filter(|r| {
                r.state.is_terminal()
                    && r.callback
                        .as_ref()
                        .is_some_and(|c| c.state == CallbackState::Pending)
            })
            .map(|r| r.id.clone())
            .collect();
        for id in pending {
            self.schedule_callback(&id);
        }
    }

    /// Closes the queue, then waits for running jobs and callbacks.
    /// Jobs still queued stay on disk and run after the next start.
    pub fn shutdown(&self) {
        self.queue.close();
        for w in self.workers.lock().unwrap().drain(..) {
            let _ = w.join();
        }
        let callbacks: Vec<_> = self.callbacks.lock().unwrap().drain(..).collect();
        for c in callbacks {
            let _ = c.join();
        }
    }

    /// Queues a translation of `archive`, validated by `suite`.
    pub fn submit(
        &self,
        archive: Vec<u8>,
        suite: TestSuite,
        options: JobOptions,
    ) -> Result<String, ServiceError> {
        self.submit_with(archive, suite, options, None)
    }

    fn submit_with(
        &self,
        archive: Vec<u8>,
        suite: TestSuite,
        options: JobOptions,
        hook: Option<HookContext>,
    ) -> Result<String, ServiceError> {
        let package = parse_package_with(&archive, &self.runtime.languages.languages())?;
        let target = options
            .target_language
            .clone()
            .unwrap_or_else(|| self.cfg.platform.target_language.clone());
        if !self.runtime.languages.contains(&target) {
            return Err(ServiceError::BadRequest(format!(
                "unsupported target language `{target}`"
            )));
        }
        let pipeline = options
            .pipeline
            .clone()
            .unwrap_or_else(|| self.cfg.platform.pipeline.clone());
        self.runtime
            .catalog
            .get(&pipeline)
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        let source = package.language().clone();
        let spec = JobSpec::new(package, target, suite)
            .and_then(|s| {
                s.with_benchmark(
                    options
                        .benchmark_invocations
                        .unwrap_or(self.cfg.bench.invocations),
                    options
                        .benchmark_repetitions
                        .unwrap_or(self.cfg.bench.repetitions),
                )
            })
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
        if self.queue.len() >= self.queue.bound() {
            return Err(ServiceError::QueueFull(self.queue.len()));
        }

        let id = uuid::Uuid::new_v4().to_string();
        self.store.put(&id, ArtifactKind::Original, &archive)?;
        self.store.put(
            &id,
            ArtifactKind::Tests,
            &serialize_test_archive(&spec.suite)?,
        )?;
        let record = JobRecord {
            id: id.clone(),
            pipeline,
            source_language: source,
            target_language: spec.target_language.clone(),
            priority: options.priority,
            benchmark_invocations: spec.benchmark_invocations,
            benchmark_repetitions: spec.benchmark_repetitions,
            state: JobState::Queued,
            submitted_at: unix_now(),
            started_at: None,
            finished_at: None,
            error: None,
            report: None,
            hook,
            callback: None,
        };
        self.records.save(&record)?;
        self.jobs.lock().unwrap().insert(id.clone(), record);
        if let Err(e) = self.queue.push(JobQueueEntry::new(&id, options.priority)) {
            self.jobs.lock().unwrap().remove(&id);
            self.records.remove(&id)?;
            self.store.forget(&id)?;
            return Err(e);
        }
        tracing::info!(job = %id, "job queued");
        Ok(id)
    }

    /// Handles a build event of the platform build manager.
    pub fn build_hook(self: &Arc<Self>, event: BuildEvent) -> Result<HookResponse, ServiceError> {
        let b64 = base64::engine::general_purpose::STANDARD;
        let archive = b64
            .decode(event.package.trim())
            .map_err(|e| ServiceError::BadRequest(format!("package is not base64: {e}")))?;
        let hook = HookContext {
            function: event.function.clone(),
            namespace: event.namespace.clone(),
            callback_url: event.callback_url.clone(),
        };
        let keep = |environment: String, detail: String| {
            let payload = CallbackPayload {
                function: hook.function.clone(),
                namespace: hook.namespace.clone(),
                job_id: None,
                action: HookAction::KeepOriginal,
                environment: environment.clone(),
                artifact_url: None,
                artifact_digest: None,
                detail: detail.clone(),
            };
            self.spawn_delivery(hook.callback_url.clone(), payload, None);
            Ok(HookResponse {
                action: HookAction::KeepOriginal,
                environment,
                job_id: None,
                detail,
            })
        };

        let package = match parse_package_with(&archive, &self.runtime.languages.languages()) {
            Ok(p) => p,
            Err(PackageError::UnknownLanguage(lang)) => {
                return keep(lang.clone(), format!("no translation path from `{lang}`"));
            }
            Err(e) => return Err(e.into()),
        };
        let source = package.language().clone();
        let target = &self.cfg.platform.target_language;
        if &source == target {
            return keep(
                source.to_string(),
                format!("function already runs on `{target}`"),
            );
        }
        let Some(tests) = &event.tests else {
            return keep(source.to_string(), "build event carries no tests".into());
        };
        let tests = b64
            .decode(tests.trim())
            .map_err(|e| ServiceError::BadRequest(format!("tests are not base64: {e}")))?;
        let suite = parse_test_archive(&tests)?;
        let id = self.submit_with(archive, suite, JobOptions::default(), Some(hook))?;
        Ok(HookResponse {
            action: HookAction::DeployOriginal,
            environment: source.to_string(),
            job_id: Some(id),
            detail: format!("translation to `{target}` queued"),
        })
    }

    pub fn status(&self, id: &str) -> Result<JobView, ServiceError> {
        let record = self.record(id)?;
        let digest = record
            .state
            .is_terminal()
            .then(|| self.store.digest_of(id, record.artifact_kind()))
            .flatten();
        Ok(record.view(digest))
    }

    pub fn record(&self, id: &str) -> Result<JobRecord, ServiceError> {
        self.jobs
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))
    }

    /// The translated archive when the translation was accepted, otherwise
    /// the original archive exactly as submitted.
    pub fn artifact(&self, id: &str) -> Result<ArtifactStoreRecord, ServiceError> {
        let record = self.record(id)?;
        if !record.state.is_terminal() {
            return Err(ServiceError::NotTerminal(id.to_string()));
        }
        self.store.get(id, record.artifact_kind())?.ok_or_else(|| {
            ServiceError::Store(format!(
                "job {id} has no {:?} artifact",
                record.artifact_kind()
            ))
        })
    }

    /// Blocks until the job is terminal and its callback, if any, settled.
    pub fn wait(&self, id: &str, timeout: Duration) -> Result<JobView, ServiceError> {
        let deadline = Instant::now() + timeout;
        let mut jobs = self.jobs.lock().unwrap();
        loop {
            let record = jobs
                .get(id)
                .ok_or_else(|| ServiceError::NotFound(id.to_string()))?;
            let settled = record
                .callback
                .as_ref()
                .map_or(true, |c| c.state != CallbackState::Pending);
            if record.state.is_terminal() && settled {
                break;
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(ServiceError::NotTerminal(id.to_string()));
            }
            jobs = self.changed.wait_timeout(jobs, deadline - now).unwrap().0;
        }
        drop(jobs);
        self.status(id)
    }

    pub fn job_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.jobs.lock().unwrap().keys().cloned().collect();
        ids.sort();
        ids
    }

    fn update(&self, id: &str, f: impl FnOnce(&mut JobRecord)) -> Result<JobRecord, ServiceError> {
        let mut jobs = self.jobs.lock().unwrap();
        let record = jobs
            .get_mut(id)
            .ok_or_else(|| ServiceError::NotFound(id.to_string()))?;
        f(record);
        self.records.save(record)?;
        let snapshot = record.clone();
        drop(jobs);
        self.changed.notify_all();
        Ok(snapshot)
    }

    fn process(self: &Arc<Self>, id: &str) {
        let claimed = self.update(id, |r| {
            if r.state == JobState::Queued {
                r.state = JobState::Running;
                r.started_at = Some(unix_now());
            }
        });
        match claimed {
            Ok(r) if r.state == JobState::Running => {}
            _ => return,
        }
        let outcome = catch_unwind(AssertUnwindSafe(|| self.run(id))).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_default();
            Err(ServiceError::Store(format!("worker panicked: {msg}")))
        });
        let finished = self.update(id, |r| {
            match outcome {
                Ok(report) => {
                    r.state = report.state;
                    r.report = Some(report);
                }
                Err(e) => {
                    tracing::error!(job = %id, "job failed: {e}");
                    r.state = JobState::Failed;
                    r.error = Some(e.to_string());
                }
            }
            r.finished_at = Some(unix_now());
            if r.hook.is_some() {
                r.callback = Some(CallbackStatus {
                    state: CallbackState::Pending,
                    attempts: 0,
                    last_error: None,
                });
            }
        });
        if let Ok(r) = finished {
            tracing::info!(job = %id, state = ?r.state, verdict = ?r.verdict(), "job finished");
            if r.hook.is_some() {
                self.schedule_callback(id);
            }
        }
    }

    fn run(&self, id: &str) -> Result<refaas_core::pipeline::JobReport, ServiceError> {
        let record = self.record(id)?;
        let missing = |kind| ServiceError::Store(format!("job {id} has no {kind:?} artifact"));
        let original = self
            .store
            .get(id, ArtifactKind::Original)?
            .ok_or_else(|| missing(ArtifactKind::Original))?;
        let tests = self
            .store
            .get(id, ArtifactKind::Tests)?
            .ok_or_else(|| missing(ArtifactKind::Tests))?;
        let package = parse_package_with(&original.archive, &self.runtime.languages.languages())?;
        let suite = parse_test_archive(&tests.archive)?;
        let spec = JobSpec::new(package, record.target_language.clone(), suite)
            .and_then(|s| {
                s.with_benchmark(record.benchmark_invocations, record.benchmark_repetitions)
            })
            .map_err(|e| ServiceError::BadRequest(e.to_string()))?
            .with_pipeline(record.pipeline.clone());
        let pipeline = self.runtime.catalog.get(&record.pipeline)?;
        let job = run_pipeline(
            TranslationJob::with_id(id, spec),
            pipeline,
            &self.runtime.services,
        )?;
        let mut report = job.report();
        if report.verdict == Some(Verdict::Translated) {
            let stored = job
                .output_package
                .as_ref()
                .ok_or_else(|| ServiceError::Store("translated job has no output package".into()))
                .and_then(|pkg| Ok(serialize_package(pkg)?))
                .and_then(|bytes| self.store.put(id, ArtifactKind::Translated, &bytes));
            if let Err(e) = stored {
                report.verdict = Some(Verdict::OriginalKept);
                report.state = JobState::Failed;
                report.detail = format!("translation could not be stored: {e}");
            }
        }
        Ok(report)
    }

    fn schedule_callback(self: &Arc<Self>, id: &str) {
        let Ok(record) = self.record(id) else { return };
        let Some(hook) = &record.hook else { return };
        let translated = record.verdict() == Some(Verdict::Translated);
        let (action, environment) = if translated {
            (
                HookAction::SwitchEnvironment,
                record.target_language.to_string(),
            )
        } else {
            (HookAction::KeepOriginal, record.source_language.to_string())
        };
        let payload = CallbackPayload {
            function: hook.function.clone(),
            namespace: hook.namespace.clone(),
            job_id: Some(id.to_string()),
            action,
            environment,
            artifact_url: self
                .cfg
                .platform
                .public_url
                .as_ref()
                .map(|u| format!("{}/v1/jobs/{id}/artifact", u.trim_end_matches('/'))),
            artifact_digest: self.store.digest_of(id, record.artifact_kind()),
            detail: record.view(None).detail,
        };
        self.spawn_delivery(hook.callback_url.clone(), payload, Some(id.to_string()));
    }

    fn spawn_delivery(
        self: &Arc<Self>,
        url: String,
        payload: CallbackPayload,
        job: Option<String>,
    ) {
        let svc = self.clone();
        let handle = thread::spawn(move || {
            let status = deliver(&url, &payload, &svc.cfg.callback);
            if status.state == CallbackState::Undelivered {
                tracing::error!(url, attempts = status.attempts, "callback undelivered");
            }
            if let Some(id) = job {
                let _ = svc.update(&id, |r| r.callback = Some(status));
            }
        });
        let mut callbacks = self.callbacks.lock().unwrap();
        callbacks.retain(|h| !h.is_finished());
        callbacks.push(handle);
    }

    /// Queue depth, job counts and one point per finished job, in line
    /// protocol.
    pub fn metrics_text(&self) -> String {
        let jobs = self.jobs.lock().unwrap();
        let mut out = String::new();
        let _ = writeln!(
            out,
            "refaas_queue depth={}i,bound={}i,workers={}i",
            self.queue.len(),
            self.queue.bound(),
            self.cfg.workers
        );
        for state in [
            JobState::Queued,
            JobState::Running,
            JobState::Succeeded,
            JobState::Failed,
        ] {
            let n = jobs.values().filter(|r| r.state == state).count();
            let _ = writeln!(out, "refaas_jobs,state={} count={n}i", state_name(state));
        }
        let mut done: Vec<&JobRecord> = jobs.values().filter(|r| r.report.is_some()).collect();
        done.sort_by(|a, b| {
            a.finished_at
                .unwrap_or(0.0)
                .total_cmp(&b.finished_at.unwrap_or(0.0))
        });
        for r in done {
            let report = r.report.as_ref().expect("filtered");
            let verdict = match r.verdict() {
                Some(Verdict::Translated) => "translated",
                _ => "original-kept",
            };
            let m = &report.metrics;
            let _ = write!(
                out,
                "refaas_conversion,job={},pipeline={},source={},target={},verdict={} runtime={},tokens={}i,energy_wh={},temperature_load={},executions={}i",
                escape_tag(&r.id),
                escape_tag(&r.pipeline),
                escape_tag(r.source_language.as_str()),
                escape_tag(r.target_language.as_str()),
                verdict,
                m.runtime,
                m.tokens,
                m.energy,
                m.temperature_load,
                report.trace.len()
            );
            if let Some(fm) = &report.function_metrics {
                if let Some(d) = fm.delta_energy {
                    let _ = write!(out, ",delta_energy_wh={d}");
                }
            }
            match r.finished_at {
                Some(t) => {
                    let _ = writeln!(out, " {}", (t * 1e9) as i64);
                }
                None => out.push('\n'),
            }
        }
        out
    }
}

fn state_name(s: JobState) -> &'static str {
    match s {
        JobState::Queued => "queued",
        JobState::Running => "running",
        JobState::Succeeded => "succeeded",
        JobState::Failed => "failed",
    }
}

fn escape_tag(v: &str) -> String {
    v.replace('\\', "\\\\")
        .replace(',', "\\,")
        .replace('=', "\\=")
        .replace(' ', "\\ ")
}

impl Drop for Service {
    fn drop(&mut self) {
        self.queue.close();
    }
}
