//! Build-hook protocol of the simulated Fission build manager.
//!
//! The build manager posts a [`BuildEvent`] before building a function. The
//! service answers at once with `deploy-original` so the platform never waits
//! on a translation, queues a job, and later posts a [`CallbackPayload`] to
//! `callback_url` telling the platform which environment to roll out.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::config::CallbackConfig;
use crate::records::{CallbackState, CallbackStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildEvent {
    pub function: String,
    #[serde(default)]
    pub namespace: Option<String>,
    /// Base64 of the deployment archive.
    pub package: String,
    /// Base64 of a zip of test files. Without tests nothing can be
    /// validated, so the original is kept.
    #[serde(default)]
    pub tests: Option<String>,
    pub callback_url: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HookAction {
    /// Build and deploy the submitted package now; a callback follows.
    DeployOriginal,
    /// Keep the original environment for good.
    KeepOriginal,
    /// Roll out the translated package on `environment`.
    SwitchEnvironment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HookResponse {
    pub action: HookAction,
    pub environment: String,
    pub job_id: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallbackPayload {
    pub function: String,
    pub namespace: Option<String>,
    pub job_id: Option<String>,
    pub action: HookAction,
    pub environment: String,
    /// Where to fetch the archive to deploy, when a public URL is configured.
    pub artifact_url: Option<String>,
    pub artifact_digest: Option<String>,
    pub detail: String,
}

/// Posts `payload` until the receiver answers 2xx or the attempts run out,
/// sleeping with doubling backoff in between.
pub fn deliver(url: &str, payload: &CallbackPayload, cfg: &CallbackConfig) -> CallbackStatus {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
        .http_status_as_error(false)
        .build()
        .into();
    let mut last_error = None;
    for attempt in 1..=cfg.attempts {
        if attempt > 1 {
            thread::sleep(cfg.backoff(attempt - 1));
        }
        match agent.post(url).send_json(payload) {
            Ok(resp) if resp.status().is_success() => {
                return CallbackStatus {
                    state: CallbackState::Delivered,
                    attempts: attempt,
                    last_error: None,
                };
            }
            Ok(resp) => last_error = Some(format!("HTTP {}", resp.status())),
            Err(e) => last_error = Some(e.to_string()),
        }
        tracing::warn!(
            url,
            attempt,
            error = last_error.as_deref().unwrap_or(""),
            "callback failed"
        );
    }
    CallbackStatus {
        state: CallbackState::Undelivered,
        attempts: cfg.attempts,
        last_error,
    }
}
