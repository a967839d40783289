use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use refaas_core::energy::{
    open_probe, Clock, MeasurementPoint, MonotonicClock, ProbeContext, ProbeLeases, SysfsThermal,
};
use refaas_core::llm::{HttpBackend, LlmBackend, LlmGateway, ReplayBackend, TemplateStore};
use refaas_core::pipeline::{
    ConversionMeter, PipelineCatalog, PipelineServices, StandardExecutors,
};
use refaas_core::runner::{InvokeLimits, LanguageRegistry, ProcessInvoker};

use crate::config::{LlmConfig, ServiceConfig};
use crate::ServiceError;

/// Everything a worker needs to run a pipeline, built once from the config.
pub struct Runtime {
    pub catalog: PipelineCatalog,
    pub languages: Arc<LanguageRegistry>,
    pub services: PipelineServices,
    /// Benchmark probe leases, shared by every worker.
    pub leases: Arc<ProbeLeases>,
}

fn config_err(what: &str, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Config(format!("{what}: {e}"))
}

pub fn build_gateway(llm: &LlmConfig) -> Result<LlmGateway, ServiceError> {
    let mut gateway = LlmGateway::new();
    let mut fallback = None;
    if let Some(path) = &llm.replay {
        let replay =
            ReplayBackend::load(path).map_err(|e| config_err(&path.display().to_string(), e))?;
        fallback = Some(("replay", Arc::new(replay) as Arc<dyn LlmBackend>, 1usize));
    }
    for b in &llm.backends {
        let api_key = b.api_key_env.as_deref().and_then(|v| std::env::var(v).ok());
        let backend: Arc<dyn LlmBackend> = Arc::new(HttpBackend::new(
            b.id.clone(),
            b.profile,
            b.base_url.clone(),
            api_key,
            Duration::from_secs(b.timeout_secs),
        ));
        if b.models.is_empty() {
            if let Some((other, ..)) = fallback {
                return Err(ServiceError::Config(format!(
                    "backend `{}` and `{other}` both want to serve unrouted models",
                    b.id
                )));
            }
            fallback = Some((b.id.as_str(), backend, b.permits));
        } else {
            gateway = gateway.route(b.models.iter().cloned(), backend, b.permits);
        }
    }
    match fallback {
        // Replayed answers are instant; permits only throttle live backends.
        Some(("replay", backend, _)) => gateway = gateway.fallback(backend, usize::MAX >> 1),
        Some((_, backend, permits)) => gateway = gateway.fallback(backend, permits),
        None => tracing::warn!("no LLM fallback configured; stages on unrouted models will fail"),
    }
    Ok(gateway)
}

impl Runtime {
    pub fn build(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        let clock: Arc<dyn Clock> = Arc::new(MonotonicClock::new());

        let mut languages = LanguageRegistry::builtin();
        let mut templates = TemplateStore::builtin();
        let mut catalog = PipelineCatalog::builtin();
        if let Some(dir) = &cfg.adapter_dir {
            languages
                .load_dir(dir)
                .map_err(|e| config_err("adapter_dir", e))?;
        }
        if let Some(dir) = &cfg.template_dir {
            templates
                .load_dir(dir)
                .map_err(|e| config_err("template_dir", e))?;
        }
        if let Some(dir) = &cfg.pipeline_dir {
            catalog
                .load_dir(dir)
                .map_err(|e| config_err("pipeline_dir", e))?;
        }
        let languages = Arc::new(languages);

        let e = &cfg.energy;
        let probes = ProbeContext {
            clock: clock.clone(),
            synthetic_dir: e.synthetic_dir.clone(),
            powercap_root: e.powercap_root.clone(),
            cpu_watts: e.cpu_watts,
        };
        let mut meter = ConversionMeter::new(clock.clone())
            .sample_interval(Duration::from_millis(e.thermal_interval_ms.max(1)))
            .with_probe(
                MeasurementPoint::E,
                open_probe(&e.service_probe, &probes)
                    .map_err(|err| config_err("service_probe", err))?,
            );
        if let Some(id) = &e.accelerator_probe {
            meter = meter.with_probe(
                MeasurementPoint::A,
                open_probe(id, &probes).map_err(|err| config_err("accelerator_probe", err))?,
            );
        }
        for zone in &e.thermal_zones {
            let sensor = SysfsThermal::open(&zone.path, zone.domain)
                .map_err(|err| config_err(&zone.path.display().to_string(), err))?;
            meter = meter.with_sensor(Arc::new(sensor));
        }
        let leases = Arc::new(ProbeLeases::new(clock));
        let bench_probe = open_probe(&e.benchmark_probe, &probes)
            .map_err(|err| config_err("benchmark_probe", err))?;

        let executors = StandardExecutors {
            gateway: Arc::new(build_gateway(&cfg.llm)?),
            templates: Arc::new(templates),
            languages: languages.clone(),
            invoker: Arc::new(match e.pin_cpu {
                Some(cpu) => ProcessInvoker::pinned(cpu),
                None => ProcessInvoker::new(),
            }),
            probe: bench_probe,
            leases: leases.clone(),
            limits: InvokeLimits {
                timeout: Duration::from_secs(cfg.invoke_timeout_secs),
                memory_bytes: None,
            },
            tolerance: cfg.tolerance,
            warmup_invocations: cfg.bench.warmup_invocations,
        }
        .registry();

        Ok(Self {
            catalog,
            languages,
            services: PipelineServices {
                executors,
                meter,
                sandbox_root: sandbox_root(cfg),
                keep_workdir: cfg.keep_workdir,
            },
            leases,
        })
    }
}

pub fn sandbox_root(cfg: &ServiceConfig) -> PathBuf {
    cfg.data_dir.join("sandboxes")
}
