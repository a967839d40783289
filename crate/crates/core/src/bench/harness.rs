use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::BenchError;
use crate::energy::{sample_window, EnergyProbe, InvocationStats, ProbeLeases};
use crate::model::{DEFAULT_BENCHMARK_INVOCATIONS, DEFAULT_BENCHMARK_REPETITIONS};
use crate::runner::{Artifact, FunctionInvoker, InvokeLimits};

pub const DEFAULT_WARMUP_INVOCATIONS: u32 = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub invocations: u32,
    pub repetitions: u32,
    pub warmup_invocations: u32,
    pub probe: String,
    #[serde(default)]
    pub limits: InvokeLimits,
}

impl BenchmarkConfig {
    pub fn new(probe: impl Into<String>) -> Self {
        Self {
            invocations: DEFAULT_BENCHMARK_INVOCATIONS,
            repetitions: DEFAULT_BENCHMARK_REPETITIONS,
            warmup_invocations: DEFAULT_WARMUP_INVOCATIONS,
            probe: probe.into(),
            limits: InvokeLimits::default(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.invocations == 0 {
            return Err(BenchError::InvalidConfig(
                "invocations must be at least 1".into(),
            ));
        }
        if self.repetitions == 0 {
            return Err(BenchError::InvalidConfig(
                "repetitions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Measurements of one repetition's measured phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionStats {
    pub joules_total: f64,
    pub joules_per_invocation: f64,
    /// Total CPU seconds of the measured invocations.
    pub cpu_seconds: f64,
    /// Largest peak resident memory of any measured invocation, in bytes.
    pub peak_memory: f64,
    /// Length of the measurement window in seconds.
    pub wall_time: f64,
    /// Mean spawn-to-first-output time in seconds.
    pub cold_start: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                std: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub joules_total: MeanStd,
    pub joules_per_invocation: MeanStd,
    pub cpu_seconds: MeanStd,
    pub peak_memory: MeanStd,
    pub wall_time: MeanStd,
    pub cold_start: MeanStd,
}

impl AggregateStats {
    fn of(reps: &[RepetitionStats]) -> Self {
        let col =
            |f: fn(&RepetitionStats) -> f64| MeanStd::of(&reps.iter().map(f).collect::<Vec<_>>());
        Self {
            joules_total: col(|r| r.joules_total),
            joules_per_invocation: col(|r| r.joules_per_invocation),
            cpu_seconds: col(|r| r.cpu_seconds),
            peak_memory: col(|r| r.peak_memory),
            wall_time: col(|r| r.wall_time),
            cold_start: col(|r| r.cold_start),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub probe: String,
    pub config: BenchmarkConfig,
    pub per_repetition: Vec<RepetitionStats>,
    pub aggregate: AggregateStats,
}

impl BenchmarkReport {
    /// Mean per-invocation figures, as used by the regression gate and the
    /// function deltas.
    pub fn stats(&self) -> InvocationStats {
        let n = f64::from(self.config.invocations);
        InvocationStats {
            invocations: u64::from(self.config.invocations),
            joules_per_invocation: self.aggregate.joules_per_invocation.mean,
            cpu_seconds: self.aggregate.cpu_seconds.mean / n,
            peak_memory: self.aggregate.peak_memory.mean,
            cold_start: self.aggregate.cold_start.mean,
            wall_time: self.aggregate.wall_time.mean / n,
        }
    }
}

/// Index of the event used by each of `n` invocations over `k` events.
pub fn event_schedule(k: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..n).map(move |i| i % k)
}

/// Closed-loop benchmark: invokes the artifact back to back, one invocation
/// at a time, cycling through `events`.
///
/// Each repetition runs `warmup_invocations` unmeasured calls, then
/// `invocations` calls inside one probe window. The probe is leased for the
/// whole benchmark. Any failed invocation aborts the benchmark with its
/// 0-based index counted over every call made, warmup included.
pub fn run_benchmark(
    artifact: &Artifact,
    events: &[Value],
    cfg: &BenchmarkConfig,
    invoker: &dyn FunctionInvoker,
    probe: &dyn EnergyProbe,
    leases: &ProbeLeases,
) -> Result<BenchmarkReport, BenchError> {
    cfg.validate()?;
    if events.is_empty() {
        return Err(BenchError::NoEvents);
    }
    let _lease = leases.acquire(probe.id(), &artifact.root.display().to_string());
    let mut index = 0u64;
    let mut call = |event: &Value| {
        let record = invoker.invoke(artifact, event, &cfg.limits);
        let at = index;
        index += 1;
        if record.exit_ok {
            Ok(record)
        } else {
            Err(BenchError::ArtifactCrash {
                index: at,
                detail: record.failure.map(|f| f.to_string()).unwrap_or_default(),
            })
        }
    };

    let n = cfg.invocations as usize;
    let mut per_repetition = Vec::with_capacity(cfg.repetitions as usize);
    for _ in 0..cfg.repetitions {
        for i in event_schedule(events.len(), cfg.warmup_invocations as usize) {
            call(&events[i])?;
        }
        let (mut cpu, mut peak, mut cold) = (0.0, 0.0f64, 0.0);
        let start = probe.read()?;
        for i in event_schedule(events.len(), n) {
            let r = call(&events[i])?;
            cpu += r.cpu_time;
            peak = peak.max(r.peak_memory as f64);
            cold += r.cold_start;
        }
        let stop = probe.read()?;
        let joules = sample_window(probe, &start, &stop)?;
        per_repetition.push(RepetitionStats {
            joules_total: joules,
            joules_per_invocation: joules / n as f64,
            cpu_seconds: cpu,
            peak_memory: peak,
            wall_time: stop.at - start.at,
            cold_start: cold / n as f64,
        });
    }
    Ok(BenchmarkReport {
        probe: probe.id().to_string(),
        config: cfg.clone(),
        aggregate: AggregateStats::of(&per_repetition),
        per_repetition,
    })
}
