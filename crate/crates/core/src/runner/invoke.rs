use std::process::Command;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::build::Artifact;
use super::process;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvokeLimits {
    pub timeout: Duration,
    /// Peak resident set size allowed, checked after the run.
    pub memory_bytes: Option<u64>,
}

impl Default for InvokeLimits {
    fn default() -> Self {
        Self {
            timeout: Duration::from_secs(10),
            memory_bytes: None,
        }
    }
}

/// Why an invocation did not produce a usable response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InvocationFailure {
    Timeout { limit_ms: u64 },
    OutputNotJson { detail: String },
    NonZeroExit { status: String, stderr: String },
    MemoryExceeded { peak: u64, limit: u64 },
    SpawnFailed { detail: String },
}

impl std::fmt::Display for InvocationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Timeout { limit_ms } => write!(f, "Timeout after {limit_ms} ms"),
            Self::OutputNotJson { detail } => write!(f, "OutputNotJson: {detail}"),
            Self::NonZeroExit { status, stderr } => {
                write!(f, "NonZeroExit ({status})")?;
                let tail = stderr.trim();
                if !tail.is_empty() {
                    let last = tail.lines().last().unwrap_or_default();
                    write!(f, ": {last}")?;
                }
                Ok(())
            }
            Self::MemoryExceeded { peak, limit } => {
                write!(f, "MemoryExceeded: peak {peak} B > limit {limit} B")
            }
            Self::SpawnFailed { detail } => write!(f, "SpawnFailed: {detail}"),
        }
    }
}

/// Measurements of one invocation. Times are in seconds, memory in bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvocationRecord {
    pub input_event: Value,
    pub output: Option<Value>,
    pub exit_ok: bool,
    pub failure: Option<InvocationFailure>,
    pub wall_time: f64,
    pub cold_start: f64,
    pub peak_memory: u64,
    pub cpu_time: f64,
}

impl InvocationRecord {
    pub fn failed(input_event: Value, failure: InvocationFailure) -> Self {
        Self {
            input_event,
            output: None,
            exit_ok: false,
            failure: Some(failure),
            wall_time: 0.0,
            cold_start: 0.0,
            peak_memory: 0,
            cpu_time: 0.0,
        }
    }
}

/// Runs one invocation of a built function. Failures are recorded, never
/// raised.
pub trait FunctionInvoker: Send + Sync {
    fn invoke(&self, artifact: &Artifact, event: &Value, limits: &InvokeLimits)
        -> InvocationRecord;
}

/// Starts a fresh process per invocation: the event goes to stdin as one JSON
/// document, the response is read from stdout.
#[derive(Debug, Default)]
pub struct ProcessInvoker {
    pin_cpu: Option<usize>,
    pin_warned: AtomicBool,
}

impl ProcessInvoker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pins every invocation to one logical CPU.
    pub fn pinned(cpu: usize) -> Self {
        Self {
            pin_cpu: Some(cpu),
            pin_warned: AtomicBool::new(false),
        }
    }
}

impl FunctionInvoker for ProcessInvoker {
    fn invoke(
        &self,
        artifact: &Artifact,
        event: &Value,
        limits: &InvokeLimits,
    ) -> InvocationRecord {
        if artifact.command.is_empty() {
            return InvocationRecord::failed(
                event.clone(),
                InvocationFailure::SpawnFailed {
                    detail: "artifact has no run command".into(),
                },
            );
        }
        let mut cmd = Command::new(artifact.program());
        cmd.args(&artifact.command[1..])
            .current_dir(&artifact.root)
            .envs(&artifact.env);
        let mut input = serde_json::to_vec(event).expect("JSON values serialize");
        input.push(b'\n');

        let pin = |child: &std::process::Child| {
            if let Some(cpu) = self.pin_cpu {
                if let Err(e) = process::pin_to_cpu(child.id() as libc::pid_t, cpu) {
                    if !self.pin_warned.swap(true, Ordering::Relaxed) {
                        tracing::warn!("cannot pin invocations to cpu {cpu}: {e}");
                    }
                }
            }
        };
        let out = match process::run(&mut cmd, &input, limits.timeout, pin) {
            Ok(out) => out,
            Err(e) => {
                return InvocationRecord::failed(
                    event.clone(),
                    InvocationFailure::SpawnFailed {
                        detail: format!("{}: {e}", artifact.program().display()),
                    },
                )
            }
        };

        let mut record = InvocationRecord {
            input_event: event.clone(),
            output: None,
            exit_ok: false,
            failure: None,
            wall_time: out.wall_time.as_secs_f64(),
            cold_start: out.first_output.unwrap_or(out.wall_time).as_secs_f64(),
            peak_memory: out.peak_rss_bytes,
            cpu_time: out.cpu_time.as_secs_f64(),
        };
        let failure = match out.exit {
            None => Some(InvocationFailure::Timeout {
                limit_ms: limits.timeout.as_millis() as u64,
            }),
            Some(_) if limits.memory_bytes.is_some_and(|l| out.peak_rss_bytes > l) => {
                Some(InvocationFailure::MemoryExceeded {
                    peak: out.peak_rss_bytes,
                    limit: limits.memory_bytes.unwrap_or_default(),
                })
            }
            Some(exit) if !exit.success() => Some(InvocationFailure::NonZeroExit {
                status: exit.to_string(),
                stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
            }),
            Some(_) => match serde_json::from_slice::<Value>(&out.stdout) {
                Ok(value) => {
                    record.output = Some(value);
                    None
                }
                Err(e) => Some(InvocationFailure::OutputNotJson {
                    detail: e.to_string(),
                }),
            },
        };
        record.exit_ok = failure.is_none();
        record.failure = failure;
        record
    }
}
