use std::path::{Path, PathBuf};
use std::time::Duration;

use refaas_core::energy::{ProbeDomain, DEFAULT_CPU_WATTS};
use refaas_core::llm::BackendProfile;
use refaas_core::LanguageId;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// Service configuration: one TOML file, then `REFAAS_*` environment
/// overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    /// Holds the artifact store, job records and job sandboxes.
    pub data_dir: PathBuf,
    pub workers: usize,
    /// Queued jobs beyond this are refused.
    pub queue_bound: usize,
    /// Shared secret expected in the `x-refaas-token` header.
    pub token: Option<String>,
    /// Extra `*.pipeline.yaml` files; they may shadow the bundled presets.
    pub pipeline_dir: Option<PathBuf>,
    /// Extra `*.prompt` templates.
    pub template_dir: Option<PathBuf>,
    /// Extra adapter profiles.
    pub adapter_dir: Option<PathBuf>,
    pub keep_workdir: bool,
    /// Relative numeric tolerance of output comparison.
    pub tolerance: f64,
    pub invoke_timeout_secs: u64,
    pub llm: LlmConfig,
    pub energy: EnergyConfig,
    pub bench: BenchConfig,
    pub callback: CallbackConfig,
    pub platform: PlatformConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            listen: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("refaas-data"),
            workers: 2,
            queue_bound: 64,
            token: None,
            pipeline_dir: None,
            template_dir: None,
            adapter_dir: None,
            keep_workdir: false,
            tolerance: refaas_core::runner::DEFAULT_TOLERANCE,
            invoke_timeout_secs: 10,
            llm: LlmConfig::default(),
            energy: EnergyConfig::default(),
            bench: BenchConfig::default(),
            callback: CallbackConfig::default(),
            platform: PlatformConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    /// Replay transcript answering every model not routed to a backend.
    pub replay: Option<PathBuf>,
    pub backends: Vec<BackendConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub id: String,
    pub profile: BackendProfile,
    pub base_url: String,
    /// Environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    /// Model ids served here. Empty makes this the fallback backend.
    #[serde(default)]
    pub models: Vec<String>,
    #[serde(default = "one")]
    pub permits: usize,
    #[serde(default = "ten_minutes")]
    pub timeout_secs: u64,
}

fn one() -> usize {
    1
}

fn ten_minutes() -> u64 {
    600
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyConfig {
    /// Probe on the host running the service (measurement point E).
    pub service_probe: String,
    /// Probe on the LLM accelerator (point A), if one is reachable.
    pub accelerator_probe: Option<String>,
    /// Probe used by benchmark and regression-gate stages.
    pub benchmark_probe: String,
    pub synthetic_dir: PathBuf,
    pub powercap_root: PathBuf,
    pub cpu_watts: f64,
    /// Logical CPU that benchmarked functions are pinned to.
    pub pin_cpu: Option<usize>,
    pub thermal_zones: Vec<ThermalZoneConfig>,
    pub thermal_interval_ms: u64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            service_probe: "cputime".into(),
            accelerator_probe: None,
            benchmark_probe: "cputime".into(),
            synthetic_dir: PathBuf::from("fixtures/probes"),
            powercap_root: PathBuf::from(refaas_core::energy::POWERCAP_ROOT),
            cpu_watts: DEFAULT_CPU_WATTS,
            pin_cpu: Some(0),
            thermal_zones: Vec::new(),
            thermal_interval_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalZoneConfig {
    /// A `/sys/class/thermal/thermal_zoneN` directory.
    pub path: PathBuf,
    pub domain: ProbeDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub invocations: u32,
    pub repetitions: u32,
    pub warmup_invocations: u32,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            invocations: refaas_core::DEFAULT_BENCHMARK_INVOCATIONS,
            repetitions: refaas_core::DEFAULT_BENCHMARK_REPETITIONS,
            warmup_invocations: refaas_core::bench::DEFAULT_WARMUP_INVOCATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CallbackConfig {
    pub attempts: u32,
    pub initial_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for CallbackConfig {
    fn default() -> Self {
        Self {
            attempts: 5,
            initial_backoff_ms: 200,
            timeout_secs: 10,
        }
    }
}

impl CallbackConfig {
    /// Delay before retry `n` (1-based): doubling from the initial backoff.
    pub fn backoff(&self, n: u32) -> Duration {
        Duration::from_millis(
            self.initial_backoff_ms
                .saturating_mul(1 << n.saturating_sub(1).min(16)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatformConfig {
    /// Language that build-hook jobs translate into.
    pub target_language: LanguageId,
    pub pipeline: String,
    /// Base URL put in callbacks so the platform can fetch the artifact.
    pub public_url: Option<String>,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        Self {
            target_language: LanguageId::go(),
            pipeline: "cot".into(),
            public_url: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    /// Reads `path` (defaults when `None`) and applies the process
    /// environment.
    pub fn load(path: Option<&Path>) -> Result<Self, ServiceError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ServiceError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&text)?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies overrides from `REFAAS_LISTEN`, `REFAAS_DATA_DIR`,
    /// `REFAAS_WORKERS`, `REFAAS_QUEUE_BOUND`, `REFAAS_TOKEN`,
    /// `REFAAS_PIPELINE_DIR`, `REFAAS_REPLAY`, `REFAAS_LLM_URL` (with
    /// `REFAAS_LLM_PROFILE`, default `openai`), `REFAAS_SERVICE_PROBE`,
    /// `REFAAS_ACCELERATOR_PROBE` and `REFAAS_BENCH_PROBE`.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        let number = |key: &str, v: String| {
            v.parse::<usize>()
                .map_err(|_| ServiceError::Config(format!("{key}: not a number: {v}")))
        };
        if let Some(v) = var("REFAAS_LISTEN") {
            self.listen = v;
        }
        if let Some(v) = var("REFAAS_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = var("REFAAS_WORKERS") {
            self.workers = number("REFAAS_WORKERS", v)?;
        }
        if let Some(v) = var("REFAAS_QUEUE_BOUND") {
            self.queue_bound = number("REFAAS_QUEUE_BOUND", v)?;
        }
        if let Some(v) = var("REFAAS_TOKEN") {
            self.token = Some(v).filter(|t| !t.is_empty());
        }
        if let Some(v) = var("REFAAS_PIPELINE_DIR") {
            self.pipeline_dir = Some(v.into());
        }
        if let Some(v) = var("REFAAS_REPLAY") {
            self.llm.replay = Some(v.into());
        }
        if let Some(url) = var("REFAAS_LLM_URL") {
            let profile = match var("REFAAS_LLM_PROFILE").as_deref() {
                None | Some("openai") => BackendProfile::Openai,
                Some("ollama") => BackendProfile::Ollama,
                Some(other) => {
                    return Err(ServiceError::Config(format!(
                        "REFAAS_LLM_PROFILE: unknown profile {other}"
                    )))
                }
            };
            self.llm.backends.retain(|b| !b.models.is_empty());
            self.llm.backends.push(BackendConfig {
                id: "env".into(),
                profile,
                base_url: url,
                api_key_env: Some("REFAAS_LLM_API_KEY".into()),
                models: Vec::new(),
                permits: 1,
                timeout_secs: ten_minutes(),
            });
        }
        if let Some(v) = var("REFAAS_SERVICE_PROBE") {
            self.energy.service_probe = v;
        }
        if let Some(v) = var("REFAAS_ACCELERATOR_PROBE") {
            self.energy.accelerator_probe = Some(v).filter(|p| !p.is_empty());
        }
        if let Some(v) = var("REFAAS_BENCH_PROBE") {
            self.energy.benchmark_probe = v;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        let bad = |m: &str| Err(ServiceError::Config(m.to_string()));
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.queue_bound == 0 {
            return bad("queue_bound must be at least 1");
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return bad("tolerance must be non-negative");
        }
        if self.bench.invocations == 0 || self.bench.repetitions == 0 {
            return bad("bench invocations and repetitions must be positive");
        }
        if self.callback.attempts == 0 {
            return bad("callback attempts must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    #[test]
    fn empty_file_is_the_default() {
        assert_eq!(
            ServiceConfig::from_toml("").unwrap(),
            ServiceConfig::default()
        );
    }

    #[test]
    fn file_values_and_env_overrides() {
        let mut cfg = ServiceConfig::from_toml(
            r#"
workers = 4
[llm]
replay = "a.replay.json"
[[llm.backends]]
id = "gpu"
profile = "ollama"
base_url = "http://gpu:11434"
models = ["qwen2.5-coder:32b"]
[energy]
benchmark_probe = "synthetic:constant_10w"
"#,
        )
        .unwrap();
        assert_eq!(cfg.workers, 4);
        assert_eq!(cfg.llm.backends[0].permits, 1);
        let env: HashMap<&str, &str> = HashMap::from([
            ("REFAAS_WORKERS", "8"),
            ("REFAAS_TOKEN", "s3cret"),
            ("REFAAS_LLM_URL", "http://localhost:8000"),
            ("REFAAS_BENCH_PROBE", "rapl"),
        ]);
        cfg.apply_env(|k| env.get(k).map(|v| v.to_string()))
            .unwrap();
        assert_eq!(cfg.workers, 8);
        assert_eq!(cfg.token.as_deref(), Some("s3cret"));
        assert_eq!(cfg.llm.backends.len(), 2);
        assert_eq!(cfg.llm.backends[1].profile, BackendProfile::Openai);
        assert_eq!(cfg.energy.benchmark_probe, "rapl");
    }

    #[test]
    fn unknown_keys_and_bad_numbers_are_rejected() {
        assert!(ServiceConfig::from_toml("wokers = 3").is_err());
        let mut cfg = ServiceConfig::default();
        assert!(cfg
            .apply_env(|k| (k == "REFAAS_WORKERS").then(|| "many".into()))
            .is_err());
        cfg.workers = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn backoff_doubles() {
        let c = CallbackConfig::default();
        assert_eq!(c.backoff(1), Duration::from_millis(200));
        assert_eq!(c.backoff(3), Duration::from_millis(800));
    }
}
