//! Translation job service: bounded priority queue, worker pool, persistent
//! artifact store, HTTP API and the platform build hook.

pub mod config;
pub mod hook;
pub mod http;
pub mod queue;
pub mod records;
pub mod runtime;
pub mod service;
pub mod store;

use refaas_core::pipeline::PipelineError;
use refaas_core::{PackageError, SuiteError};
use thiserror::Error;

pub use config::ServiceConfig;
pub use hook::{BuildEvent, CallbackPayload, HookAction, HookResponse};
pub use queue::{JobQueue, JobQueueEntry};
pub use records::{CallbackState, CallbackStatus, JobOptions, JobRecord, JobView};
pub use runtime::Runtime;
pub use service::Service;
pub use store::{ArtifactKind, ArtifactStore, ArtifactStoreRecord};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("invalid package: {0}")]
    Package(#[from] PackageError),
    #[error("invalid test suite: {0}")]
    Suite(#[from] SuiteError),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("queue is full ({0} jobs waiting)")]
    QueueFull(usize),
    #[error("service is shutting down")]
    ShuttingDown,
    #[error("unknown job `{0}`")]
    NotFound(String),
    #[error("job `{0}` is not finished")]
    NotTerminal(String),
    #[error("missing or wrong access token")]
    Unauthorized,
    #[error("artifact store: {0}")]
    Store(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl ServiceError {
    /// Short machine-readable name used in HTTP error bodies.
    pub fn code(&self) -> String {
        match self {
            Self::Package(e) => format!("{e:?}")
                .split(['(', ' ', '{'])
                .next()
                .unwrap_or("Package")
                .to_string(),
            Self::Suite(e) => format!("{e:?}")
                .split(['(', ' ', '{'])
                .next()
                .unwrap_or("Suite")
                .to_string(),
            Self::Config(_) => "Config".into(),
            Self::BadRequest(_) => "BadRequest".into(),
            Self::QueueFull(_) => "QueueFull".into(),
            Self::ShuttingDown => "ShuttingDown".into(),
            Self::NotFound(_) => "NotFound".into(),
            Self::NotTerminal(_) => "NotTerminal".into(),
            Self::Unauthorized => "Unauthorized".into(),
            Self::Store(_) => "Store".into(),
            Self::Pipeline(_) => "Pipeline".into(),
            Self::Io(_) => "Io".into(),
        }
    }
}
