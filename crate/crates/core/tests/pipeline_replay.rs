use std::path::{Path, PathBuf};
use std::sync::Arc;

use refaas_core::corpus::{find_function, load_corpus, CorpusFunction};
use refaas_core::energy::{Clock, MonotonicClock, ProbeLeases, SyntheticProbe, SyntheticScript};
use refaas_core::llm::{LlmGateway, ReplayBackend, TemplateStore};
use refaas_core::pipeline::{
    run_pipeline, ConversionMeter, JobState, PipelineCatalog, PipelineServices, StageKind,
    StageStatus, StandardExecutors, TranslationJob, Verdict,
};
use refaas_core::runner::{InvokeLimits, LanguageRegistry, ProcessInvoker};
use refaas_core::{JobSpec, LanguageId};

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn services(transcript: &Path, sandbox: &Path) -> PipelineServices {
    let clock: Arc<dyn Clock> = Arc::new(MonotonicClock::new());
    let replay = ReplayBackend::load(transcript).unwrap();
    let executors = StandardExecutors {
        gateway: Arc::new(LlmGateway::new().fallback(Arc::new(replay), 4)),
        templates: Arc::new(TemplateStore::builtin()),
        languages: Arc::new(LanguageRegistry::builtin()),
        invoker: Arc::new(ProcessInvoker::new()),
        probe: Arc::new(
            SyntheticProbe::new(
                "synthetic:constant_10w",
                SyntheticScript::constant(10.0),
                clock.clone(),
            )
            .unwrap(),
        ),
        leases: Arc::new(ProbeLeases::new(clock)),
        limits: InvokeLimits::default(),
        tolerance: 1e-9,
        warmup_invocations: 2,
    }
    .registry();
    PipelineServices {
        executors,
        meter: ConversionMeter::default(),
        sandbox_root: sandbox.to_path_buf(),
        keep_workdir: false,
    }
}

fn job(f: &CorpusFunction) -> TranslationJob {
    let spec = JobSpec::new(
        f.package(&LanguageId::python()).unwrap().clone(),
        LanguageId::go(),
        f.suite.clone(),
    )
    .unwrap()
    .with_benchmark(20, 2)
    .unwrap();
    TranslationJob::new(spec)
}

fn translate(f: &CorpusFunction, transcript: &Path) -> TranslationJob {
    let catalog = PipelineCatalog::builtin();
    let sandbox = tempfile::tempdir().unwrap();
    run_pipeline(
        job(f),
        catalog.get("cot").unwrap(),
        &services(transcript, sandbox.path()),
    )
    .unwrap()
}

fn builds(job: &TranslationJob) -> Vec<(u32, StageStatus)> {
    job.trace
        .iter()
        .filter(|o| o.kind == StageKind::Build)
        .map(|o| (o.attempt, o.result))
        .collect()
}

#[test]
fn fix_loop_recovers_one_failed_build() {
    let corpus = load_corpus(&repo().join("corpus")).unwrap();
    for id in ["f01", "f02", "f05", "f07", "f11", "f14"] {
        let f = find_function(&corpus, id).unwrap();
        let transcript = repo().join(format!("fixtures/replays/fix_loop/{}.replay.json", f.id));
        let job = translate(f, &transcript);
        assert_eq!(
            job.verdict,
            Some(Verdict::Translated),
            "{}: {}",
            f.id,
            job.detail
        );
        assert_eq!(job.state, JobState::Succeeded);
        assert_eq!(
            builds(&job),
            [(1, StageStatus::Fail), (2, StageStatus::Pass)],
            "{}",
            f.id
        );
        let first = job
            .trace
            .iter()
            .find(|o| o.kind == StageKind::Build)
            .unwrap();
        assert!(first.detail.contains("cannot use"), "{}", first.detail);
        let fm = job.function_metrics.as_ref().unwrap();
        assert!(fm.validation && fm.buildable);
        assert_eq!(fm.tests_passed, 4);
        assert_eq!(
            job.output_package.as_ref().unwrap().language(),
            &LanguageId::go()
        );
        assert!(job.metrics.tokens > 0);
        let documented = job.trace.iter().find(|o| o.stage == "document").unwrap();
        assert!(documented.artifacts.contains_key("documented_source"));
    }
}

#[test]
fn code_that_never_compiles_keeps_the_original_after_three_builds() {
    let corpus = load_corpus(&repo().join("corpus")).unwrap();
    let f = find_function(&corpus, "f02").unwrap();
    let job = translate(
        f,
        &repo().join("fixtures/replays/never_compiles.replay.json"),
    );
    assert_eq!(job.verdict, Some(Verdict::OriginalKept));
    assert_eq!(job.state, JobState::Failed);
    assert_eq!(builds(&job).len(), 3);
    assert!(builds(&job).iter().all(|(_, s)| *s == StageStatus::Fail));
    assert_eq!(
        job.output_package.as_ref(),
        f.package(&LanguageId::python())
    );
}

#[test]
fn exhausted_transcript_terminates_within_budget() {
    let corpus = load_corpus(&repo().join("corpus")).unwrap();
    let f = find_function(&corpus, "f01").unwrap();
    let job = translate(f, &repo().join("fixtures/replays/always_fail.replay.json"));
    assert_eq!(job.verdict, Some(Verdict::OriginalKept));
    assert!(job.trace.len() <= 20);
    assert!(job
        .trace
        .iter()
        .skip(1)
        .all(|o| o.result == StageStatus::Fail));
}

#[test]
fn prose_without_code_is_an_extraction_failure() {
    let corpus = load_corpus(&repo().join("corpus")).unwrap();
    let f = find_function(&corpus, "f02").unwrap();
    let job = translate(f, &repo().join("fixtures/replays/prose_only.replay.json"));
    assert_eq!(job.verdict, Some(Verdict::OriginalKept));
    let translate: Vec<_> = job
        .trace
        .iter()
        .filter(|o| o.stage == "translate")
        .collect();
    assert_eq!(translate.len(), 3);
    assert!(
        translate[0].detail.to_lowercase().contains("extract"),
        "{}",
        translate[0].detail
    );
    assert!(translate[0].llm_exchange.is_some());
}

#[test]
fn failing_original_is_stopped_by_the_precheck() {
    let corpus = load_corpus(&repo().join("corpus")).unwrap();
    let f = find_function(&corpus, "f02").unwrap();
    let g = find_function(&corpus, "f01").unwrap();
    let spec = JobSpec::new(
        f.package(&LanguageId::python()).unwrap().clone(),
        LanguageId::go(),
        g.suite.clone(),
    )
    .unwrap();
    let catalog = PipelineCatalog::builtin();
    let sandbox = tempfile::tempdir().unwrap();
    let transcript = repo().join(format!("fixtures/replays/fix_loop/{}.replay.json", f.id));
    let job = run_pipeline(
        TranslationJob::new(spec),
        catalog.get("cot").unwrap(),
        &services(&transcript, sandbox.path()),
    )
    .unwrap();
    assert_eq!(job.verdict, Some(Verdict::OriginalKept));
    assert_eq!(job.trace.len(), 1);
    assert_eq!(job.trace[0].stage, "precheck");
    assert_eq!(job.metrics.tokens, 0);
}
