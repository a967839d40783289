//! Uniform client over completion backends.
//!
//! The [`LlmGateway`] routes a request to a backend by model id and bounds the
//! number of in-flight requests per backend. Backends are either live HTTP
//! completion endpoints ([`HttpBackend`]) or the deterministic
//! [`ReplayBackend`] used for hermetic tests.

mod extract;
mod http;
mod replay;
mod template;

use std::collections::HashMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{extract_code, CodeSyntax};
pub use http::{BackendProfile, HttpBackend};
pub use replay::{ReplayBackend, ReplayEntry};
pub use template::{render, PromptTemplate, TemplateOutput, TemplateStore};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("no backend available for model `{0}`")]
    BackendUnavailable(String),
    #[error("replay transcript has no entry for template `{template_id}` attempt {attempt}")]
    TranscriptExhausted { template_id: String, attempt: u32 },
    #[error("completion timed out after {0:?}")]
    Timeout(Duration),
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("backend protocol error: {0}")]
    Protocol(String),
    #[error("could not extract code: {0}")]
    ExtractionFailed(String),
    #[error("template placeholder `{0}` is not bound")]
    MissingBinding(String),
    #[error("unknown prompt template `{0}`")]
    UnknownTemplate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub model: String,
    pub temperature: f64,
    pub prompt: String,
    pub max_output_tokens: u32,
}

impl LlmRequest {
    pub fn new(
        model: impl Into<String>,
        temperature: f64,
        prompt: impl Into<String>,
        max_output_tokens: u32,
    ) -> Result<Self, LlmError> {
        let prompt = prompt.into();
        if prompt.trim().is_empty() {
            return Err(LlmError::EmptyPrompt);
        }
        Ok(Self {
            model: model.into(),
            temperature,
            prompt,
            max_output_tokens,
        })
    }
}

/// Which pipeline call a request belongs to. Replay backends key their
/// transcripts on it; live backends ignore it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallTag {
    pub template_id: String,
    pub attempt: u32,
}

impl CallTag {
    pub fn new(template_id: impl Into<String>, attempt: u32) -> Self {
        Self {
            template_id: template_id.into(),
            attempt,
        }
    }
}

/// One logged request/response pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub request: LlmRequest,
    pub tag: CallTag,
    pub response_text: String,
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    /// Seconds.
    pub wall_time: f64,
    pub backend: String,
}

impl LlmExchange {
    pub fn total_tokens(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

/// Token count used when a backend does not report its own: the number of
/// whitespace-separated words.
pub fn whitespace_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

pub trait LlmBackend: Send + Sync {
    fn id(&self) -> &str;
    fn complete(&self, request: &LlmRequest, tag: &CallTag) -> Result<LlmExchange, LlmError>;
}

/// Counting semaphore limiting concurrent requests to one backend.
struct Permits {
    available: Mutex<usize>,
    freed: Condvar,
}

impl Permits {
    fn new(count: usize) -> Self {
        Self {
            available: Mutex::new(count.max(1)),
            freed: Condvar::new(),
        }
    }

    fn acquire(&self) -> PermitGuard<'_> {
        let mut available = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *available == 0 {
            available = self
                .freed
                .wait(available)
                .unwrap_or_else(|e| e.into_inner());
        }
        *available -= 1;
        PermitGuard { permits: self }
    }
}

struct PermitGuard<'a> {
    permits: &'a Permits,
}

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        let mut available = self
            .permits
            .available
            .lock()
            .unwrap_or_else(|e| e.into_inner());
        *available += 1;
        self.permits.freed.notify_one();
    }
}

#[derive(Clone)]
struct Route {
    backend: Arc<dyn LlmBackend>,
    permits: Arc<Permits>,
}

/// Routes requests to backends by model id.
#[derive(Clone, Default)]
pub struct LlmGateway {
    routes: HashMap<String, Route>,
    fallback: Option<Route>,
}

impl LlmGateway {
    pub fn new() -> Self {
        Self::default()
    }

    /// Serves `models` with `backend`, allowing at most `permits` requests in
    /// flight on it.
    pub fn route<I, S>(mut self, models: I, backend: Arc<dyn LlmBackend>, permits: usize) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let route = Route {
            backend,
            permits: Arc::new(Permits::new(permits)),
        };
        for model in models {
            self.routes.insert(model.into(), route.clone());
        }
        self
    }

    /// Serves every model without an explicit route.
    pub fn fallback(mut self, backend: Arc<dyn LlmBackend>, permits: usize) -> Self {
        self.fallback = Some(Route {
            backend,
            permits: Arc::new(Permits::new(permits)),
        });
        self
    }

    pub fn complete(&self, request: &LlmRequest, tag: &CallTag) -> Result<LlmExchange, LlmError> {
        let route = self
            .routes
            .get(&request.model)
            .or(self.fallback.as_ref())
            .ok_or_else(|| LlmError::BackendUnavailable(request.model.clone()))?;
        let _permit = route.permits.acquire();
        route.backend.complete(request, tag)
    }
}
