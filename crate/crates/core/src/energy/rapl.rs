use std::fs;
use std::path::{Path, PathBuf};

use super::{Clock, EnergyError, EnergyProbe, MonotonicClock, ProbeDomain, ProbeMark};

pub const POWERCAP_ROOT: &str = "/sys/class/powercap";

/// Cumulative package energy from a powercap zone (`energy_uj`, in µJ).
#[derive(Debug)]
pub struct RaplProbe {
    id: String,
    zone: PathBuf,
    range_joules: Option<f64>,
    clock: MonotonicClock,
}

fn read_uj(path: &Path) -> Result<u64, EnergyError> {
    let text = fs::read_to_string(path)
        .map_err(|e| EnergyError::ProbeUnavailable(format!("{}: {e}", path.display())))?;
    text.trim()
        .parse()
        .map_err(|_| EnergyError::ProbeUnavailable(format!("{}: not a counter", path.display())))
}

impl RaplProbe {
    /// Opens one zone directory, e.g. `/sys/class/powercap/intel-rapl:0`.
    pub fn open(zone: &Path) -> Result<Self, EnergyError> {
        let name = fs::read_to_string(zone.join("name"))
            .map(|n| n.trim().to_string())
            .unwrap_or_else(|_| {
                zone.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
        read_uj(&zone.join("energy_uj"))?;
        let range = read_uj(&zone.join("max_energy_range_uj")).ok();
        Ok(Self {
            id: format!("rapl:{name}"),
            zone: zone.to_path_buf(),
            range_joules: range.map(|uj| uj as f64 / 1e6),
            clock: MonotonicClock::new(),
        })
    }

    /// Finds the zone named `name` (default: the first `package-*` zone)
    /// among the top-level zones under `root`.
    pub fn discover(root: &Path, name: Option<&str>) -> Result<Self, EnergyError> {
        let entries = fs::read_dir(root)
            .map_err(|e| EnergyError::ProbeUnavailable(format!("{}: {e}", root.display())))?;
        let mut zones: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("intel-rapl:") && n.matches(':').count() == 1)
            })
            .collect();
        zones.sort();
        for zone in zones {
            let zone_name = fs::read_to_string(zone.join("name")).unwrap_or_default();
            let zone_name = zone_name.trim();
            let wanted = match name {
                Some(n) => zone_name == n,
                None => zone_name.starts_with("package"),
            };
            if wanted {
                return Self::open(&zone);
            }
        }
        Err(EnergyError::ProbeUnavailable(format!(
            "no powercap zone {} under {}",
            name.unwrap_or("package-*"),
            root.display()
        )))
    }
}

impl EnergyProbe for RaplProbe {
    fn id(&self) -> &str {
        &self.id
    }

    fn domain(&self) -> ProbeDomain {
        ProbeDomain::CpuPackage
    }

    fn counter_range(&self) -> Option<f64> {
        self.range_joules
    }

    fn read(&self) -> Result<ProbeMark, EnergyError> {
        let uj = read_uj(&self.zone.join("energy_uj"))?;
        Ok(ProbeMark {
            probe: self.id.clone(),
            at: self.clock.now(),
            joules: uj as f64 / 1e6,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::sample_window;

    fn fake_zone(root: &Path, dir: &str, name: &str, uj: u64, max: u64) -> PathBuf {
        let zone = root.join(dir);
        fs::create_dir_all(&zone).unwrap();
        fs::write(zone.join("name"), format!("{name}\n")).unwrap();
        fs::write(zone.join("energy_uj"), format!("{uj}\n")).unwrap();
        fs::write(zone.join("max_energy_range_uj"), format!("{max}\n")).unwrap();
        zone
    }

    #[test]
    fn microjoules_to_joules() {
        let root = tempfile::tempdir().unwrap();
        let zone = fake_zone(
            root.path(),
            "intel-rapl:0",
            "package-0",
            1_000_000,
            262_143_328_850,
        );
        let probe = RaplProbe::discover(root.path(), None).unwrap();
        assert_eq!(probe.id(), "rapl:package-0");
        let start = probe.read().unwrap();
        fs::write(zone.join("energy_uj"), "2500000\n").unwrap();
        let stop = probe.read().unwrap();
        assert_eq!(sample_window(&probe, &start, &stop).unwrap(), 1.5);
    }

    #[test]
    fn wrap_uses_declared_range() {
        let root = tempfile::tempdir().unwrap();
        let zone = fake_zone(
            root.path(),
            "intel-rapl:1",
            "package-1",
            9_000_000,
            10_000_000,
        );
        fake_zone(root.path(), "intel-rapl:1:0", "core", 0, 1);
        let probe = RaplProbe::discover(root.path(), Some("package-1")).unwrap();
        let start = probe.read().unwrap();
        fs::write(zone.join("energy_uj"), "500000\n").unwrap();
        let stop = probe.read().unwrap();
        assert_eq!(sample_window(&probe, &start, &stop).unwrap(), 1.5);
    }

    #[test]
    fn missing_tree_is_unavailable() {
        let root = tempfile::tempdir().unwrap();
        assert!(matches!(
            RaplProbe::discover(&root.path().join("none"), None),
            Err(EnergyError::ProbeUnavailable(_))
        ));
    }
}
