use std::collections::HashSet;
use std::sync::{Arc, Condvar, Mutex};

use serde::{Deserialize, Serialize};

use super::Clock;

/// One completed exclusive use of a probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaseInterval {
    pub probe: String,
    pub holder: String,
    pub start: f64,
    pub end: f64,
}

/// Grants exclusive use of probes so that measurement windows on one probe
/// never overlap.
pub struct ProbeLeases {
    busy: Mutex<HashSet<String>>,
    freed: Condvar,
    log: Mutex<Vec<LeaseInterval>>,
    clock: Arc<dyn Clock>,
}

impl ProbeLeases {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            busy: Mutex::new(HashSet::new()),
            freed: Condvar::new(),
            log: Mutex::new(Vec::new()),
            clock,
        }
    }

    /// Blocks until `probe` is free, then holds it until the lease drops.
    pub fn acquire(&self, probe: &str, holder: &str) -> ProbeLease<'_> {
        let mut busy = self.busy.lock().unwrap_or_else(|e| e.into_inner());
        while busy.contains(probe) {
            busy = self.freed.wait(busy).unwrap_or_else(|e| e.into_inner());
        }
        busy.insert(probe.to_string());
        ProbeLease {
            owner: self,
            probe: probe.to_string(),
            holder: holder.to_string(),
            start: self.clock.now(),
        }
    }

    /// Every completed lease, in release order.
    pub fn intervals(&self) -> Vec<LeaseInterval> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

pub struct ProbeLease<'a> {
    owner: &'a ProbeLeases,
    probe: String,
    holder: String,
    start: f64,
}

impl Drop for ProbeLease<'_> {
    fn drop(&mut self) {
        let end = self.owner.clock.now();
        self.owner
            .log
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(LeaseInterval {
                probe: self.probe.clone(),
                holder: self.holder.clone(),
                start: self.start,
                end,
            });
        self.owner
            .busy
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .remove(&self.probe);
        self.owner.freed.notify_all();
    }
}

#[cfg(test)]
mod tests {
    use std::thread;
    use std::time::Duration;

    use super::*;
    use crate::energy::MonotonicClock;

    #[test]
    fn same_probe_windows_never_overlap() {
        let leases = Arc::new(ProbeLeases::new(Arc::new(MonotonicClock::new())));
        let handles: Vec<_> = (0..4)
            .map(|i| {
                let leases = leases.clone();
                thread::spawn(move || {
                    let _lease = leases.acquire("rapl:package-0", &format!("job{i}"));
                    thread::sleep(Duration::from_millis(20));
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let mut log = leases.intervals();
        assert_eq!(log.len(), 4);
        log.sort_by(|a, b| a.start.total_cmp(&b.start));
        for w in log.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
    }

    #[test]
    fn different_probes_are_independent() {
        let leases = ProbeLeases::new(Arc::new(MonotonicClock::new()));
        let _a = leases.acquire("a", "x");
        let _b = leases.acquire("b", "y");
    }
}
