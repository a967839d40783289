#![allow(dead_code)]

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use axum::routing::post;
use axum::{Json, Router};
use refaas_core::corpus::{find_function, load_corpus, CorpusFunction};
use refaas_core::{serialize_package, LanguageId};
use refaas_service::{Service, ServiceConfig};
use serde_json::Value;

pub fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn function(id: &str) -> CorpusFunction {
    let corpus = load_corpus(&repo().join("corpus")).unwrap();
    find_function(&corpus, id).unwrap().clone()
}

pub fn replay(name: &str) -> PathBuf {
    repo().join("fixtures/replays").join(name)
}

pub fn fix_loop(f: &CorpusFunction) -> PathBuf {
    replay(&format!("fix_loop/{}.replay.json", f.id))
}

/// Small benchmarks, synthetic probes and a fresh data directory.
#[allow(clippy::field_reassign_with_default)]
pub fn config(data: &Path, transcript: &Path) -> ServiceConfig {
    let mut cfg = ServiceConfig::default();
    cfg.data_dir = data.to_path_buf();
    cfg.llm.replay = Some(transcript.to_path_buf());
    cfg.energy.synthetic_dir = repo().join("fixtures/probes");
    cfg.energy.service_probe = "synthetic:constant_10w".into();
    cfg.energy.benchmark_probe = "synthetic:constant_10w".into();
    cfg.energy.pin_cpu = None;
    cfg.bench.invocations = 20;
    cfg.bench.repetitions = 2;
    cfg.bench.warmup_invocations = 2;
    cfg.callback.initial_backoff_ms = 10;
    cfg.callback.timeout_secs = 2;
    cfg
}

/// The python package of `f` zipped without compression, so it differs from
/// the canonical archive the service would produce itself.
pub fn stored_zip(f: &CorpusFunction) -> Vec<u8> {
    let pkg = f.package(&LanguageId::python()).unwrap();
    let canonical = serialize_package(pkg).unwrap();
    let mut src = zip::ZipArchive::new(std::io::Cursor::new(canonical)).unwrap();
    let mut out = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
    let opts =
        zip::write::SimpleFileOptions::default().compression_method(zip::CompressionMethod::Stored);
    for i in 0..src.len() {
        let mut e = src.by_index(i).unwrap();
        let mut buf = Vec::new();
        std::io::Read::read_to_end(&mut e, &mut buf).unwrap();
        out.start_file(e.name(), opts).unwrap();
        out.write_all(&buf).unwrap();
    }
    out.finish().unwrap().into_inner()
}

pub fn test_files(f: &CorpusFunction) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(f.dir.join("tests"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

pub fn tests_zip(f: &CorpusFunction) -> Vec<u8> {
    let mut out = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
    for (name, bytes) in test_files(f) {
        out.start_file(
            format!("tests/{name}"),
            zip::write::SimpleFileOptions::default(),
        )
        .unwrap();
        out.write_all(&bytes).unwrap();
    }
    out.finish().unwrap().into_inner()
}

pub struct Multipart {
    boundary: String,
    body: Vec<u8>,
}

impl Multipart {
    pub fn new() -> Self {
        Self {
            boundary: "refaas-test-boundary-7d1f".into(),
            body: Vec::new(),
        }
    }

    pub fn part(
        mut self,
        name: &str,
        file_name: Option<&str>,
        content_type: &str,
        bytes: &[u8],
    ) -> Self {
        write!(
            self.body,
            "--{}\r\nContent-Disposition: form-data; name=\"{name}\"",
            self.boundary
        )
        .unwrap();
        if let Some(f) = file_name {
            write!(self.body, "; filename=\"{f}\"").unwrap();
        }
        write!(self.body, "\r\nContent-Type: {content_type}\r\n\r\n").unwrap();
        self.body.extend_from_slice(bytes);
        self.body.extend_from_slice(b"\r\n");
        self
    }

    pub fn finish(mut self) -> (String, Vec<u8>) {
        write!(self.body, "--{}--\r\n", self.boundary).unwrap();
        (
            format!("multipart/form-data; boundary={}", self.boundary),
            self.body,
        )
    }
}

pub fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(30)))
        .build()
        .into()
}

/// Serves `svc` on an ephemeral port from a background runtime.
pub fn serve(svc: Arc<Service>) -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, refaas_service::http::router(svc))
                .await
                .unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

/// A stand-in platform that records every callback it receives.
pub struct Platform {
    pub url: String,
    pub received: Arc<Mutex<Vec<Value>>>,
}

impl Platform {
    pub fn start() -> Self {
        let received = Arc::new(Mutex::new(Vec::new()));
        let sink = received.clone();
        let (tx, rx) = std::sync::mpsc::channel::<SocketAddr>();
        thread::spawn(move || {
            let rt = tokio::runtime::Runtime::new().unwrap();
            rt.block_on(async move {
                let app = Router::new().route(
                    "/callback",
                    post(move |Json(v): Json<Value>| {
                        let sink = sink.clone();
                        async move {
                            sink.lock().unwrap().push(v);
                            "ok"
                        }
                    }),
                );
                let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
                tx.send(listener.local_addr().unwrap()).unwrap();
                axum::serve(listener, app).await.unwrap();
            });
        });
        Self {
            url: format!("http://{}/callback", rx.recv().unwrap()),
            received,
        }
    }

    pub fn wait_for(&self, n: usize, timeout: Duration) -> Vec<Value> {
        let deadline = Instant::now() + timeout;
        loop {
            let got = self.received.lock().unwrap().clone();
            if got.len() >= n || Instant::now() > deadline {
                return got;
            }
            thread::sleep(Duration::from_millis(20));
        }
    }
}

/// A URL on which nothing listens.
pub fn dead_url() -> String {
    let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = l.local_addr().unwrap();
    drop(l);
    format!("http://{addr}/callback")
}
