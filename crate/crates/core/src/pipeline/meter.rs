use std::sync::Arc;
use std::time::Duration;

use crate::energy::{
    integrate_temperature, sample_window, Clock, ConversionMetrics, EnergyProbe, MeasurementPoint,
    MonotonicClock, ProbeMark, ThermalSampler, ThermalSensor,
};

/// Measures the cost of whole pipeline runs: wall time, energy on the
/// configured probes and accumulated heat on the configured sensors.
#[derive(Clone)]
pub struct ConversionMeter {
    clock: Arc<dyn Clock>,
    probes: Vec<(MeasurementPoint, Arc<dyn EnergyProbe>)>,
    sensors: Vec<Arc<dyn ThermalSensor>>,
    interval: Duration,
}

impl ConversionMeter {
    /// A meter that only measures runtime.
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            clock,
            probes: Vec::new(),
            sensors: Vec::new(),
            interval: Duration::from_secs(1),
        }
    }

    pub fn with_probe(mut self, point: MeasurementPoint, probe: Arc<dyn EnergyProbe>) -> Self {
        self.probes.push((point, probe));
        self
    }

    pub fn with_sensor(mut self, sensor: Arc<dyn ThermalSensor>) -> Self {
        self.sensors.push(sensor);
        self
    }

    pub fn sample_interval(mut self, interval: Duration) -> Self {
        self.interval = interval;
        self
    }

    pub fn start(&self) -> MeterSession {
        let marks = self
            .probes
            .iter()
            .filter_map(|(point, probe)| match probe.read() {
                Ok(mark) => Some((*point, probe.clone(), mark)),
                Err(e) => {
                    tracing::warn!(
                        "probe {} unavailable, conversion energy incomplete: {e}",
                        probe.id()
                    );
                    None
                }
            })
            .collect();
        let samplers = self
            .sensors
            .iter()
            .map(|s| ThermalSampler::start(s.clone(), self.clock.clone(), self.interval))
            .collect();
        MeterSession {
            clock: self.clock.clone(),
            started: self.clock.now(),
            marks,
            samplers,
        }
    }
}

impl Default for ConversionMeter {
    fn default() -> Self {
        Self::new(Arc::new(MonotonicClock::new()))
    }
}

pub struct MeterSession {
    clock: Arc<dyn Clock>,
    started: f64,
    marks: Vec<(MeasurementPoint, Arc<dyn EnergyProbe>, ProbeMark)>,
    samplers: Vec<ThermalSampler>,
}

impl MeterSession {
    /// Energy is keyed `<point>:<probe id>`; heat is keyed by sensor domain
    /// with the first sample of each sensor as its baseline.
    pub fn finish(self) -> ConversionMetrics {
        let mut metrics = ConversionMetrics {
            runtime: (self.clock.now() - self.started).max(0.0),
            ..ConversionMetrics::default()
        };
        for (point, probe, start) in self.marks {
            let joules = probe
                .read()
                .and_then(|stop| sample_window(probe.as_ref(), &start, &stop));
            match joules {
                Ok(j) => metrics.add_energy(&format!("{point:?}:{}", probe.id()), j),
                Err(e) => tracing::warn!("probe {} failed at end of conversion: {e}", probe.id()),
            }
        }
        for sampler in self.samplers {
            let trace = sampler.stop();
            if let Some(&(_, baseline)) = trace.samples.first() {
                if let Ok(v) = integrate_temperature(&trace.samples, baseline) {
                    metrics.add_temperature(trace.domain.as_str(), v);
                }
            }
        }
        metrics
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{ManualClock, ProbeDomain, SyntheticProbe, SyntheticScript};

    #[test]
    fn energy_and_runtime_over_the_session() {
        let clock = Arc::new(ManualClock::new(0.0));
        let gpu = Arc::new(
            SyntheticProbe::new(
                "synthetic:gpu",
                SyntheticScript::constant(300.0),
                clock.clone(),
            )
            .unwrap(),
        );
        let host = Arc::new(
            SyntheticProbe::new(
                "synthetic:host",
                SyntheticScript::constant(60.0),
                clock.clone(),
            )
            .unwrap(),
        );
        let meter = ConversionMeter::new(clock.clone())
            .with_probe(MeasurementPoint::A, gpu)
            .with_probe(MeasurementPoint::E, host);
        let session = meter.start();
        clock.advance(50.0);
        let m = session.finish();
        assert_eq!(m.runtime, 50.0);
        assert_eq!(m.energy, 5.0);
        assert_eq!(m.energy_by_probe["A:synthetic:gpu"], 300.0 * 50.0 / 3600.0);
        assert_eq!(m.energy_by_probe.len(), 2);
        assert_eq!(ProbeDomain::Gpu.as_str(), "gpu");
    }
}
