mod common;

use std::time::Duration;

use base64::Engine as _;
use common::*;
use refaas_core::pipeline::{JobState, Verdict};
use refaas_core::{parse_package, serialize_package, LanguageId, Manifest};
use refaas_service::{CallbackState, JobOptions, JobView, Service, ServiceError};
use serde_json::{json, Value};

const WAIT: Duration = Duration::from_secs(120);

fn submit_http(base: &str, body: (String, Vec<u8>)) -> (u16, Value) {
    let mut resp = agent()
        .post(&format!("{base}/v1/jobs"))
        .header("content-type", &body.0)
        .send(&body.1[..])
        .unwrap();
    let status = resp.status().as_u16();
    (status, resp.body_mut().read_json().unwrap())
}

fn poll(base: &str, id: &str) -> JobView {
    let deadline = std::time::Instant::now() + WAIT;
    loop {
        let view: JobView = agent()
            .get(&format!("{base}/v1/jobs/{id}"))
            .call()
            .unwrap()
            .body_mut()
            .read_json()
            .unwrap();
        if view.state.is_terminal() {
            return view;
        }
        assert!(
            std::time::Instant::now() < deadline,
            "job {id} did not finish"
        );
        std::thread::sleep(Duration::from_millis(50));
    }
}

fn fetch(base: &str, id: &str) -> (u16, Vec<u8>, Option<String>) {
    let mut resp = agent()
        .get(&format!("{base}/v1/jobs/{id}/artifact"))
        .call()
        .unwrap();
    let digest = resp
        .headers()
        .get("x-refaas-digest")
        .map(|v| v.to_str().unwrap().to_string());
    (
        resp.status().as_u16(),
        resp.body_mut().read_to_vec().unwrap(),
        digest,
    )
}

#[test]
fn failed_job_returns_the_submitted_archive_byte_for_byte() {
    let data = tempfile::tempdir().unwrap();
    let svc = Service::open(config(data.path(), &replay("always_fail.replay.json"))).unwrap();
    svc.start_workers();
    let base = serve(svc.clone());
    let f = function("f01");
    let archive = stored_zip(&f);
    let mut form = Multipart::new().part("package", Some("fn.zip"), "application/zip", &archive);
    for (name, bytes) in test_files(&f) {
        form = form.part("test", Some(&name), "application/json", &bytes);
    }
    let (status, body) = submit_http(&base, form.finish());
    assert_eq!(status, 202, "{body}");
    let id = body["job_id"].as_str().unwrap();

    let view = poll(&base, id);
    assert_eq!(view.state, JobState::Failed);
    assert_eq!(view.verdict, Some(Verdict::OriginalKept));
    assert!(!view.trace.is_empty());
    assert!(view.trace.len() <= 20);

    let (status, bytes, digest) = fetch(&base, id);
    assert_eq!(status, 200);
    assert_eq!(bytes, archive);
    assert_eq!(digest.unwrap(), refaas_service::store::digest(&archive));
    svc.shutdown();
}

#[test]
fn successful_job_returns_a_translated_archive() {
    let data = tempfile::tempdir().unwrap();
    let f = function("f01");
    let svc = Service::open(config(data.path(), &fix_loop(&f))).unwrap();
    svc.start_workers();
    let base = serve(svc.clone());
    let options = serde_json::to_vec(&json!({"pipeline": "cot", "target_language": "go"})).unwrap();
    let form = Multipart::new()
        .part(
            "package",
            Some("fn.zip"),
            "application/zip",
            &stored_zip(&f),
        )
        .part(
            "tests",
            Some("tests.zip"),
            "application/zip",
            &tests_zip(&f),
        )
        .part("options", None, "application/json", &options);
    let (status, body) = submit_http(&base, form.finish());
    assert_eq!(status, 202, "{body}");
    let id = body["job_id"].as_str().unwrap();

    let view = poll(&base, id);
    assert_eq!(view.verdict, Some(Verdict::Translated), "{}", view.detail);
    assert_eq!(view.state, JobState::Succeeded);
    assert!(view.metrics.energy > 0.0);
    assert!(view.metrics.tokens > 0);
    let am = view
        .amortization
        .expect("benchmarked jobs report amortization");
    assert!((am.conversion_energy - view.metrics.energy * 3600.0).abs() < 1e-9);
    let builds: Vec<_> = view
        .trace
        .iter()
        .filter(|t| t.stage == "build")
        .map(|t| t.result)
        .collect();
    assert_eq!(builds.len(), 2);

    let (status, bytes, _) = fetch(&base, id);
    assert_eq!(status, 200);
    let pkg = parse_package(&bytes).unwrap();
    assert_eq!(pkg.language(), &LanguageId::go());
    assert_eq!(serialize_package(&pkg).unwrap(), bytes);

    let metrics = agent()
        .get(&format!("{base}/v1/metrics"))
        .call()
        .unwrap()
        .body_mut()
        .read_to_string()
        .unwrap();
    assert!(
        metrics.contains("refaas_jobs,state=succeeded count=1i"),
        "{metrics}"
    );
    assert!(metrics.contains(&format!("job={id}")));
    assert!(metrics.contains("verdict=translated"));
    svc.shutdown();
}

#[test]
fn request_errors_map_to_status_codes() {
    let data = tempfile::tempdir().unwrap();
    let mut cfg = config(data.path(), &replay("always_fail.replay.json"));
    cfg.queue_bound = 1;
    // Workers are not started, so the first job stays queued.
    let svc = Service::open(cfg).unwrap();
    let base = serve(svc.clone());
    let f = function("f01");

    let no_manifest = {
        let mut w = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
        w.start_file("handler.py", zip::write::SimpleFileOptions::default())
            .unwrap();
        std::io::Write::write_all(&mut w, b"print(1)\n").unwrap();
        w.finish().unwrap().into_inner()
    };
    let form = Multipart::new()
        .part("package", None, "application/zip", &no_manifest)
        .part("tests", None, "application/zip", &tests_zip(&f));
    let (status, body) = submit_http(&base, form.finish());
    assert_eq!(status, 400);
    assert_eq!(body["code"], "MissingManifest");

    let form = || {
        Multipart::new()
            .part("package", None, "application/zip", &stored_zip(&f))
            .part("tests", None, "application/zip", &tests_zip(&f))
            .finish()
    };
    let (status, body) = submit_http(&base, form());
    assert_eq!(status, 202);
    let id = body["job_id"].as_str().unwrap().to_string();
    let (status, body) = submit_http(&base, form());
    assert_eq!(status, 429, "{body}");

    let view = svc.status(&id).unwrap();
    assert_eq!(view.state, JobState::Queued);
    assert!(view.trace.is_empty());
    assert_eq!(fetch(&base, &id).0, 409);
    assert_eq!(fetch(&base, "no-such-job").0, 404);
    let resp = agent()
        .get(&format!("{base}/v1/jobs/no-such-job"))
        .call()
        .unwrap();
    assert_eq!(resp.status().as_u16(), 404);

    let bad_options = Multipart::new()
        .part("package", None, "application/zip", &stored_zip(&f))
        .part("tests", None, "application/zip", &tests_zip(&f))
        .part("options", None, "application/json", br#"{"pipline":"cot"}"#);
    assert_eq!(submit_http(&base, bad_options.finish()).0, 400);
}

#[test]
fn token_is_required_when_configured() {
    let data = tempfile::tempdir().unwrap();
    let mut cfg = config(data.path(), &replay("always_fail.replay.json"));
    cfg.token = Some("s3cret".into());
    let base = serve(Service::open(cfg).unwrap());
    let url = format!("{base}/v1/metrics");
    assert_eq!(agent().get(&url).call().unwrap().status().as_u16(), 401);
    assert_eq!(
        agent()
            .get(&url)
            .header("x-refaas-token", "nope")
            .call()
            .unwrap()
            .status()
            .as_u16(),
        401
    );
    assert_eq!(
        agent()
            .get(&url)
            .header("x-refaas-token", "s3cret")
            .call()
            .unwrap()
            .status()
            .as_u16(),
        200
    );
}

#[test]
fn verdicts_and_queued_jobs_survive_a_restart() {
    let data = tempfile::tempdir().unwrap();
    let cfg = config(data.path(), &replay("always_fail.replay.json"));
    let f = function("f02");
    let archive = stored_zip(&f);

    let (done, queued) = {
        let svc = Service::open(cfg.clone()).unwrap();
        svc.start_workers();
        let done = svc
            .submit(archive.clone(), f.suite.clone(), JobOptions::default())
            .unwrap();
        svc.wait(&done, WAIT).unwrap();
        svc.shutdown();
        // Queued after the pool stopped: must run after the restart.
        let svc = Service::open(cfg.clone()).unwrap();
        let queued = svc
            .submit(archive.clone(), f.suite.clone(), JobOptions::default())
            .unwrap();
        (done, queued)
    };

    let svc = Service::open(cfg).unwrap();
    let first = svc.artifact(&done).unwrap();
    assert_eq!(first.archive, archive);
    assert_eq!(svc.status(&queued).unwrap().state, JobState::Queued);
    svc.start_workers();
    let view = svc.wait(&queued, WAIT).unwrap();
    assert_eq!(view.verdict, Some(Verdict::OriginalKept));
    assert_eq!(svc.artifact(&queued).unwrap().archive, archive);
    svc.shutdown();
}

#[test]
fn every_job_finishes_under_saturation() {
    let data = tempfile::tempdir().unwrap();
    let mut cfg = config(data.path(), &replay("always_fail.replay.json"));
    cfg.workers = 2;
    cfg.queue_bound = 12;
    let svc = Service::open(cfg).unwrap();
    let f = function("f01");
    let ids: Vec<String> = (0..12)
        .map(|_| {
            svc.submit(stored_zip(&f), f.suite.clone(), JobOptions::default())
                .unwrap()
        })
        .collect();
    assert!(matches!(
        svc.submit(stored_zip(&f), f.suite.clone(), JobOptions::default()),
        Err(ServiceError::QueueFull(12))
    ));
    svc.start_workers();
    for id in &ids {
        let view = svc.wait(id, WAIT).unwrap();
        assert!(view.state.is_terminal());
        assert!(view.trace.len() <= 20);
    }
    svc.shutdown();
}

#[test]
fn concurrent_jobs_use_disjoint_sandboxes_and_serialized_probe_windows() {
    let data = tempfile::tempdir().unwrap();
    let f = function("f02");
    let mut cfg = config(data.path(), &fix_loop(&f));
    cfg.workers = 3;
    cfg.keep_workdir = true;
    let svc = Service::open(cfg).unwrap();
    svc.start_workers();
    let ids: Vec<String> = (0..3)
        .map(|_| {
            svc.submit(stored_zip(&f), f.suite.clone(), JobOptions::default())
                .unwrap()
        })
        .collect();
    for id in &ids {
        let view = svc.wait(id, WAIT).unwrap();
        assert_eq!(view.verdict, Some(Verdict::Translated), "{}", view.detail);
    }
    let dirs: Vec<String> = std::fs::read_dir(data.path().join("sandboxes"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(dirs.len(), 3);
    for id in &ids {
        assert_eq!(dirs.iter().filter(|d| d.contains(id.as_str())).count(), 1);
    }
    let mut windows = svc.runtime().leases.intervals();
    // Each job benchmarks the original and the translation.
    assert_eq!(windows.len(), 6);
    windows.sort_by(|a, b| a.start.total_cmp(&b.start));
    for pair in windows.windows(2) {
        assert!(pair[0].end <= pair[1].start, "{pair:?}");
    }
    svc.shutdown();
}

fn build_event(archive: &[u8], tests: Option<&[u8]>, callback_url: &str) -> Value {
    let b64 = base64::engine::general_purpose::STANDARD;
    json!({
        "function": "hello",
        "namespace": "default",
        "package": b64.encode(archive),
        "tests": tests.map(|t| b64.encode(t)),
        "callback_url": callback_url,
    })
}

fn post_hook(base: &str, event: &Value) -> (u16, Value) {
    let mut resp = agent()
        .post(&format!("{base}/v1/platform/fission/build-hook"))
        .send_json(event)
        .unwrap();
    (resp.status().as_u16(), resp.body_mut().read_json().unwrap())
}

#[test]
fn build_hook_deploys_the_original_then_switches_environment() {
    let data = tempfile::tempdir().unwrap();
    let f = function("f01");
    let mut cfg = config(data.path(), &fix_loop(&f));
    cfg.platform.public_url = Some("http://refaas.example".into());
    let svc = Service::open(cfg).unwrap();
    svc.start_workers();
    let base = serve(svc.clone());
    let platform = Platform::start();

    let (status, resp) = post_hook(
        &base,
        &build_event(&stored_zip(&f), Some(&tests_zip(&f)), &platform.url),
    );
    assert_eq!(status, 202, "{resp}");
    assert_eq!(resp["action"], "deploy-original");
    assert_eq!(resp["environment"], "python");
    let id = resp["job_id"].as_str().unwrap();

    let got = platform.wait_for(1, WAIT);
    assert_eq!(got.len(), 1);
    assert_eq!(got[0]["action"], "switch-environment");
    assert_eq!(got[0]["environment"], "go");
    assert_eq!(got[0]["job_id"], id);
    assert_eq!(
        got[0]["artifact_url"],
        format!("http://refaas.example/v1/jobs/{id}/artifact")
    );
    let view = svc.wait(id, WAIT).unwrap();
    assert_eq!(view.callback.unwrap().state, CallbackState::Delivered);
    assert_eq!(got[0]["artifact_digest"], view.artifact.unwrap().digest);
    svc.shutdown();
}

#[test]
fn build_hook_keeps_unsupported_languages_at_once() {
    let data = tempfile::tempdir().unwrap();
    let svc = Service::open(config(data.path(), &replay("always_fail.replay.json"))).unwrap();
    let base = serve(svc.clone());
    let platform = Platform::start();
    let ruby = {
        let mut w = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
        let opts = zip::write::SimpleFileOptions::default();
        let manifest =
            serde_json::to_vec(&Manifest::new(LanguageId::new("ruby"), "handler.rb")).unwrap();
        w.start_file("refaas.manifest.json", opts).unwrap();
        std::io::Write::write_all(&mut w, &manifest).unwrap();
        w.start_file("handler.rb", opts).unwrap();
        std::io::Write::write_all(&mut w, b"puts 1\n").unwrap();
        w.finish().unwrap().into_inner()
    };
    let (status, resp) = post_hook(&base, &build_event(&ruby, None, &platform.url));
    assert_eq!(status, 202);
    assert_eq!(resp["action"], "keep-original");
    assert!(resp["job_id"].is_null());
    let got = platform.wait_for(1, Duration::from_secs(10));
    assert_eq!(got[0]["action"], "keep-original");
    assert_eq!(got[0]["environment"], "ruby");
    assert!(svc.job_ids().is_empty());

    let (status, _) = post_hook(&base, &json!({"function": "x"}));
    assert_eq!(status, 400);
}

#[test]
fn unreachable_platform_leaves_the_callback_undelivered() {
    let data = tempfile::tempdir().unwrap();
    let mut cfg = config(data.path(), &replay("always_fail.replay.json"));
    cfg.callback.attempts = 3;
    let svc = Service::open(cfg).unwrap();
    svc.start_workers();
    let f = function("f01");
    let event: refaas_service::BuildEvent = serde_json::from_value(build_event(
        &stored_zip(&f),
        Some(&tests_zip(&f)),
        &dead_url(),
    ))
    .unwrap();
    let resp = svc.build_hook(event).unwrap();
    let id = resp.job_id.unwrap();
    let view = svc.wait(&id, WAIT).unwrap();
    assert!(view.state.is_terminal());
    let cb = view.callback.unwrap();
    assert_eq!(cb.state, CallbackState::Undelivered);
    assert_eq!(cb.attempts, 3);
    assert!(cb.last_error.is_some());
    svc.shutdown();
}
