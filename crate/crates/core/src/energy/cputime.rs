use std::sync::Arc;

use super::{Clock, EnergyError, EnergyProbe, ProbeDomain, ProbeMark};

/// Watts charged per busy CPU second when no hardware counter is available.
pub const DEFAULT_CPU_WATTS: f64 = 15.0;

/// Estimated energy of reaped child processes: their accumulated CPU time
/// multiplied by a fixed per-core power. Only an estimate, but it is
/// available everywhere and tracks the work the functions actually did.
pub struct CpuTimeProbe {
    id: String,
    watts: f64,
    clock: Arc<dyn Clock>,
}

impl CpuTimeProbe {
    pub fn new(watts: f64, clock: Arc<dyn Clock>) -> Self {
        Self {
            id: "cputime".to_string(),
            watts,
            clock,
        }
    }

    pub fn watts(&self) -> f64 {
        self.watts
    }
}

pub(crate) fn children_cpu_seconds() -> Result<f64, EnergyError> {
    // SAFETY: rusage is plain old data; getrusage fills it in.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    if unsafe { libc::getrusage(libc::RUSAGE_CHILDREN, &mut usage) } != 0 {
        return Err(EnergyError::ProbeUnavailable(
            std::io::Error::last_os_error().to_string(),
        ));
    }
    let secs = |tv: libc::timeval| tv.tv_sec as f64 + tv.tv_usec as f64 / 1e6;
    Ok(secs(usage.ru_utime) + secs(usage.ru_stime))
}

impl EnergyProbe for CpuTimeProbe {
    fn id(&self) -> &str {
        &self.id
    }

    fn domain(&self) -> ProbeDomain {
        ProbeDomain::Process
    }

    fn counter_range(&self) -> Option<f64> {
        None
    }

    fn read(&self) -> Result<ProbeMark, EnergyError> {
        Ok(ProbeMark {
            probe: self.id.clone(),
            at: self.clock.now(),
            joules: children_cpu_seconds()? * self.watts,
        })
    }
}
