use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::amortization::joules_to_wh;
use crate::runner::ValidationSummary;

/// Where in the deployment a quantity is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasurementPoint {
    /// Model server and its accelerator: tokens, LLM energy and heat.
    A,
    /// Build of the candidate: buildable flag.
    B,
    /// Test and benchmark run of the translated function.
    C,
    /// Benchmark run of the original function.
    D,
    /// Translation service host: pipeline energy and heat.
    E,
    /// Fresh function process start: cold start.
    F,
    /// Pipeline driver: conversion runtime.
    G,
}

impl MeasurementPoint {
    pub fn role(self) -> &'static str {
        match self {
            Self::A => "llm-accelerator",
            Self::B => "build",
            Self::C => "translated-function",
            Self::D => "original-function",
            Self::E => "service-host",
            Self::F => "cold-start",
            Self::G => "pipeline",
        }
    }
}

/// Mean per-invocation resource use over a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvocationStats {
    pub invocations: u64,
    pub joules_per_invocation: f64,
    pub cpu_seconds: f64,
    pub peak_memory: f64,
    pub cold_start: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateDecision {
    pub pass: bool,
    pub original_joules_per_invocation: f64,
    pub translated_joules_per_invocation: f64,
    pub margin: f64,
}

/// Fails when the translation spends more energy per invocation than the
/// original, allowing a relative `margin` (0 means any increase fails).
pub fn regression_gate(
    original: &InvocationStats,
    translated: &InvocationStats,
    margin: f64,
) -> GateDecision {
    let limit = original.joules_per_invocation * (1.0 + margin.max(0.0));
    GateDecision {
        pass: translated.joules_per_invocation <= limit,
        original_joules_per_invocation: original.joules_per_invocation,
        translated_joules_per_invocation: translated.joules_per_invocation,
        margin,
    }
}

/// Cost of one conversion, failed attempts included.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConversionMetrics {
    /// Seconds.
    pub runtime: f64,
    pub tokens: u64,
    /// Watt-hours over all probes.
    pub energy: f64,
    /// Watt-hours per probe id.
    pub energy_by_probe: BTreeMap<String, f64>,
    /// Degree-hours summed over all thermal domains.
    pub temperature_load: f64,
    /// Degree-hours per thermal domain.
    pub temperature_by_domain: BTreeMap<String, f64>,
}

impl ConversionMetrics {
    pub fn add_energy(&mut self, probe: &str, joules: f64) {
        let wh = joules_to_wh(joules.max(0.0));
        *self.energy_by_probe.entry(probe.to_string()).or_default() += wh;
        self.energy += wh;
    }

    pub fn add_temperature(&mut self, domain: &str, degree_hours: f64) {
        let v = degree_hours.max(0.0);
        *self
            .temperature_by_domain
            .entry(domain.to_string())
            .or_default() += v;
        self.temperature_load += v;
    }

    pub fn energy_joules(&self) -> f64 {
        self.energy * super::amortization::JOULES_PER_WH
    }
}

/// Quality and resource change of a translated function against its
/// original. Deltas are translated minus original; negative is an
/// improvement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionMetrics {
    /// Watt-hours per invocation.
    pub delta_energy: Option<f64>,
    /// CPU seconds per invocation.
    pub delta_cpu: Option<f64>,
    /// Bytes of peak resident memory.
    pub delta_memory: Option<f64>,
    /// Seconds.
    pub delta_cold_start: Option<f64>,
    pub validation: bool,
    pub tests_passed: usize,
    pub tests_total: usize,
    pub buildable: bool,
}

impl FunctionMetrics {
    pub fn new(
        buildable: bool,
        summary: Option<&ValidationSummary>,
        benchmarks: Option<(&InvocationStats, &InvocationStats)>,
    ) -> Self {
        let delta = |f: fn(&InvocationStats) -> f64| benchmarks.map(|(o, t)| f(t) - f(o));
        Self {
            delta_energy: delta(|s| joules_to_wh(s.joules_per_invocation)),
            delta_cpu: delta(|s| s.cpu_seconds),
            delta_memory: delta(|s| s.peak_memory),
            delta_cold_start: delta(|s| s.cold_start),
            validation: summary.is_some_and(|s| s.validation),
            tests_passed: summary.map_or(0, |s| s.tests_passed),
            tests_total: summary.map_or(0, |s| s.tests_total),
            buildable,
        }
    }
}
