//! Energy and temperature sampling, per-function and per-conversion metrics,
//! the resource-regression gate and the amortization calculator.

mod amortization;
mod clock;
mod cputime;
mod lease;
mod metrics;
mod probe;
mod rapl;
mod synthetic;
mod thermal;

use thiserror::Error;

pub use amortization::{
    amortization, joules_to_wh, wh_to_joules, AmortizationReport, JOULES_PER_WH,
};
pub use clock::{Clock, ManualClock, MonotonicClock};
pub use cputime::{CpuTimeProbe, DEFAULT_CPU_WATTS};
pub use lease::{LeaseInterval, ProbeLease, ProbeLeases};
pub use metrics::{
    regression_gate, ConversionMetrics, FunctionMetrics, GateDecision, InvocationStats,
    MeasurementPoint,
};
pub use probe::{
    measure, open_probe, sample_window, EnergyProbe, ProbeContext, ProbeDomain, ProbeMark,
};
pub use rapl::{RaplProbe, POWERCAP_ROOT};
pub use synthetic::{SyntheticProbe, SyntheticScript};
pub use thermal::{
    integrate_temperature, SyntheticThermal, SysfsThermal, ThermalSampler, ThermalSensor,
    ThermalTrace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnergyError {
    #[error("probe unavailable: {0}")]
    ProbeUnavailable(String),
    #[error("counter of probe `{0}` went backwards and declares no wrap range")]
    CounterWrapUndeclared(String),
    #[error("window stops at {stop} before it starts at {start}")]
    WindowReversed { start: f64, stop: f64 },
    #[error("marks were not read from probe `{probe}`")]
    ForeignMark { probe: String },
    #[error("need at least 2 temperature samples, got {0}")]
    InsufficientSamples(usize),
    #[error("temperature samples are not time-ordered")]
    UnorderedSamples,
    #[error("invalid synthetic script: {0}")]
    InvalidScript(String),
    #[error("unknown probe `{0}`")]
    UnknownProbe(String),
}
