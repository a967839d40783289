use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Clock, EnergyError, ProbeDomain};

/// A temperature source in °C.
pub trait ThermalSensor: Send + Sync {
    fn id(&self) -> &str;
    fn domain(&self) -> ProbeDomain;
    fn read_celsius(&self) -> Result<f64, EnergyError>;
}

/// A sysfs thermal zone (`temp` in millidegrees).
#[derive(Debug)]
pub struct SysfsThermal {
    id: String,
    path: PathBuf,
    domain: ProbeDomain,
}

impl SysfsThermal {
    pub fn open(zone: &Path, domain: ProbeDomain) -> Result<Self, EnergyError> {
        let kind = fs::read_to_string(zone.join("type")).unwrap_or_default();
        let sensor = Self {
            id: format!("thermal:{}", kind.trim()),
            path: zone.join("temp"),
            domain,
        };
        sensor.read_celsius()?;
        Ok(sensor)
    }
}

impl ThermalSensor for SysfsThermal {
    fn id(&self) -> &str {
        &self.id
    }

    fn domain(&self) -> ProbeDomain {
        self.domain
    }

    fn read_celsius(&self) -> Result<f64, EnergyError> {
        let text = fs::read_to_string(&self.path)
            .map_err(|e| EnergyError::ProbeUnavailable(format!("{}: {e}", self.path.display())))?;
        let milli: f64 = text.trim().parse().map_err(|_| {
            EnergyError::ProbeUnavailable(format!("{}: not a number", self.path.display()))
        })?;
        Ok(milli / 1000.0)
    }
}

/// Temperature as a function of clock time.
pub struct SyntheticThermal {
    id: String,
    domain: ProbeDomain,
    clock: Arc<dyn Clock>,
    curve: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl SyntheticThermal {
    pub fn new(
        id: impl Into<String>,
        domain: ProbeDomain,
        clock: Arc<dyn Clock>,
        curve: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            domain,
            clock,
            curve: Box::new(curve),
        }
    }
}

impl ThermalSensor for SyntheticThermal {
    fn id(&self) -> &str {
        &self.id
    }

    fn domain(&self) -> ProbeDomain {
        self.domain
    }

    fn read_celsius(&self) -> Result<f64, EnergyError> {
        Ok((self.curve)(self.clock.now()))
    }
}

/// A time-ordered series of (seconds, °C) readings from one sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalTrace {
    pub sensor: String,
    pub domain: ProbeDomain,
    pub samples: Vec<(f64, f64)>,
}

/// Samples a sensor on a background thread until stopped.
pub struct ThermalSampler {
    stop: Arc<AtomicBool>,
    handle: JoinHandle<ThermalTrace>,
}

impl ThermalSampler {
    pub fn start(
        sensor: Arc<dyn ThermalSensor>,
        clock: Arc<dyn Clock>,
        interval: Duration,
    ) -> Self {
        let stop = Arc::new(AtomicBool::new(false));
        let flag = stop.clone();
        let handle = thread::spawn(move || {
            let mut samples = Vec::new();
            let take = |samples: &mut Vec<(f64, f64)>| {
                if let Ok(c) = sensor.read_celsius() {
                    samples.push((clock.now(), c));
                }
            };
            take(&mut samples);
            while !flag.load(Ordering::Relaxed) {
                thread::park_timeout(interval);
                take(&mut samples);
            }
            ThermalTrace {
                sensor: sensor.id().to_string(),
                domain: sensor.domain(),
                samples,
            }
        });
        Self { stop, handle }
    }

    pub fn stop(self) -> ThermalTrace {
        self.stop.store(true, Ordering::Relaxed);
        self.handle.thread().unpark();
        self.handle.join().expect("thermal sampler panicked")
    }
}

/// Accumulated temperature above `baseline`, in °C·h.
///
/// Readings are joined linearly; only the parts of the curve above the
/// baseline count.
pub fn integrate_temperature(samples: &[(f64, f64)], baseline: f64) -> Result<f64, EnergyError> {
    if samples.len() < 2 {
        return Err(EnergyError::InsufficientSamples(samples.len()));
    }
    let mut degree_seconds = 0.0;
    for w in samples.windows(2) {
        let ((t0, c0), (t1, c1)) = (w[0], w[1]);
        if t1 < t0 {
            return Err(EnergyError::UnorderedSamples);
        }
        let (e0, e1) = (c0 - baseline, c1 - baseline);
        let dt = t1 - t0;
        degree_seconds += if e0 >= 0.0 && e1 >= 0.0 {
            (e0 + e1) / 2.0 * dt
        } else if e0 <= 0.0 && e1 <= 0.0 {
            0.0
        } else {
            // Only the triangle on the positive side of the crossing.
            let pos = e0.max(e1);
            let frac = pos / (e0.abs() + e1.abs());
            pos * frac * dt / 2.0
        };
    }
    Ok(degree_seconds / 3600.0)
}
