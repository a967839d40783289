use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Clock, EnergyError, EnergyProbe, ProbeDomain, ProbeMark};

/// Piecewise-linear cumulative energy over clock time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScript {
    /// `[seconds, cumulative joules]`, strictly increasing in time and
    /// non-decreasing in joules.
    pub points: Vec<(f64, f64)>,
    /// Power after the last point. Defaults to the slope of the last segment.
    #[serde(default)]
    pub tail_watts: Option<f64>,
    /// Counter wraps to zero at this many joules.
    #[serde(default)]
    pub counter_range: Option<f64>,
}

impl SyntheticScript {
    /// Constant power from time zero.
    pub fn constant(watts: f64) -> Self {
        Self {
            points: vec![(0.0, 0.0)],
            tail_watts: Some(watts),
            counter_range: None,
        }
    }

    fn validate(&self) -> Result<(), EnergyError> {
        let bad = |why: &str| Err(EnergyError::InvalidScript(why.to_string()));
        if self.points.is_empty() {
            return bad("script has no points");
        }
        for w in self.points.windows(2) {
            if w[1].0 <= w[0].0 {
                return bad("times must be strictly increasing");
            }
            if w[1].1 < w[0].1 {
                return bad("cumulative joules must not decrease");
            }
        }
        if self.tail_watts.is_some_and(|w| w < 0.0) {
            return bad("tail power must be non-negative");
        }
        if self.counter_range.is_some_and(|r| r <= 0.0) {
            return bad("counter range must be positive");
        }
        Ok(())
    }

    /// Cumulative joules at `t`, before any counter wrap.
    pub fn joules_at(&self, t: f64) -> f64 {
        let pts = &self.points;
        let (t0, j0) = pts[0];
        if t <= t0 {
            return j0;
        }
        for w in pts.windows(2) {
            let ((ta, ja), (tb, jb)) = (w[0], w[1]);
            if t == tb {
                return jb;
            }
            if t < tb {
                return ja + (t - ta) * (jb - ja) / (tb - ta);
            }
        }
        let (tl, jl) = pts[pts.len() - 1];
        let slope = self.tail_watts.unwrap_or_else(|| match pts.len() {
            1 => 0.0,
            n => {
                let (tp, jp) = pts[n - 2];
                (jl - jp) / (tl - tp)
            }
        });
        jl + (t - tl) * slope
    }
}

/// Scripted probe for hermetic tests and demos.
pub struct SyntheticProbe {
    id: String,
    script: SyntheticScript,
    clock: Arc<dyn Clock>,
}

impl SyntheticProbe {
    pub fn new(
        id: impl Into<String>,
        script: SyntheticScript,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, EnergyError> {
        script.validate()?;
        Ok(Self {
            id: id.into(),
            script,
            clock,
        })
    }

    /// Loads `<name>.json`; the probe id becomes `synthetic:<name>`.
    pub fn load(path: &Path, clock: Arc<dyn Clock>) -> Result<Self, EnergyError> {
        let text = fs::read_to_string(path)
            .map_err(|e| EnergyError::ProbeUnavailable(format!("{}: {e}", path.display())))?;
        let script: SyntheticScript = serde_json::from_str(&text)
            .map_err(|e| EnergyError::InvalidScript(format!("{}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::new(format!("synthetic:{name}"), script, clock)
    }
}

impl EnergyProbe for SyntheticProbe {
    fn id(&self) -> &str {
        &self.id
    }

    fn domain(&self) -> ProbeDomain {
        ProbeDomain::Synthetic
    }

    fn counter_range(&self) -> Option<f64> {
        self.script.counter_range
    }

    fn read(&self) -> Result<ProbeMark, EnergyError> {
        let at = self.clock.now();
        let mut joules = self.script.joules_at(at);
        if let Some(range) = self.script.counter_range {
            joules %= range;
        }
        Ok(ProbeMark {
            probe: self.id.clone(),
            at,
            joules,
        })
    }
}
