use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Clock, CpuTimeProbe, EnergyError, RaplProbe, SyntheticProbe};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeDomain {
    CpuPackage,
    Gpu,
    Process,
    Synthetic,
}

impl ProbeDomain {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CpuPackage => "cpu-package",
            Self::Gpu => "gpu",
            Self::Process => "process",
            Self::Synthetic => "synthetic",
        }
    }
}

/// One reading of a cumulative energy counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMark {
    pub probe: String,
    /// Clock seconds.
    pub at: f64,
    /// Cumulative counter in joules.
    pub joules: f64,
}

/// A cumulative joule counter. Readings never decrease except when the
/// counter wraps at [`EnergyProbe::counter_range`].
pub trait EnergyProbe: Send + Sync {
    fn id(&self) -> &str;
    fn domain(&self) -> ProbeDomain;
    /// Joules at which the counter wraps to zero, if it does.
    fn counter_range(&self) -> Option<f64>;
    fn read(&self) -> Result<ProbeMark, EnergyError>;
}

/// Joules consumed between two readings of `probe`, corrected for at most one
/// counter wrap.
pub fn sample_window(
    probe: &dyn EnergyProbe,
    start: &ProbeMark,
    stop: &ProbeMark,
) -> Result<f64, EnergyError> {
    if start.probe != probe.id() || stop.probe != probe.id() {
        return Err(EnergyError::ForeignMark {
            probe: probe.id().to_string(),
        });
    }
    if stop.at < start.at {
        return Err(EnergyError::WindowReversed {
            start: start.at,
            stop: stop.at,
        });
    }
    if stop.joules >= start.joules {
        return Ok(stop.joules - start.joules);
    }
    match probe.counter_range() {
        Some(range) => Ok(range - start.joules + stop.joules),
        None => Err(EnergyError::CounterWrapUndeclared(probe.id().to_string())),
    }
}

/// Runs `f` inside a window of `probe` and returns its result with the joules
/// consumed.
pub fn measure<T>(probe: &dyn EnergyProbe, f: impl FnOnce() -> T) -> Result<(T, f64), EnergyError> {
    let start = probe.read()?;
    let value = f();
    let stop = probe.read()?;
    Ok((value, sample_window(probe, &start, &stop)?))
}

/// Where probes named by id find their inputs.
#[derive(Clone)]
pub struct ProbeContext {
    pub clock: Arc<dyn Clock>,
    /// Directory holding `<name>.json` synthetic scripts.
    pub synthetic_dir: PathBuf,
    /// Root of the powercap sysfs tree.
    pub powercap_root: PathBuf,
    /// Watts per busy CPU second charged by the `cputime` estimate.
    pub cpu_watts: f64,
}

impl ProbeContext {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            clock,
            synthetic_dir: PathBuf::from("fixtures/probes"),
            powercap_root: PathBuf::from(super::rapl::POWERCAP_ROOT),
            cpu_watts: super::cputime::DEFAULT_CPU_WATTS,
        }
    }
}

/// Opens a probe by id: `rapl`, `rapl:<zone-name>`, `cputime`,
/// `cputime:<watts>` or `synthetic:<name>`.
pub fn open_probe(id: &str, ctx: &ProbeContext) -> Result<Arc<dyn EnergyProbe>, EnergyError> {
    let (kind, arg) = match id.split_once(':') {
        Some((k, a)) => (k, Some(a)),
        None => (id, None),
    };
    match kind {
        "rapl" => Ok(Arc::new(RaplProbe::discover(&ctx.powercap_root, arg)?)),
        "cputime" => {
            let watts = match arg {
                Some(w) => w
                    .parse()
                    .map_err(|_| EnergyError::UnknownProbe(id.to_string()))?,
                None => ctx.cpu_watts,
            };
            Ok(Arc::new(CpuTimeProbe::new(watts, ctx.clock.clone())))
        }
        "synthetic" => {
            let name = arg.ok_or_else(|| EnergyError::UnknownProbe(id.to_string()))?;
            let path = ctx.synthetic_dir.join(format!("{name}.json"));
            Ok(Arc::new(SyntheticProbe::load(&path, ctx.clock.clone())?))
        }
        _ => Err(EnergyError::UnknownProbe(id.to_string())),
    }
}
