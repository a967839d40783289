use serde::{Deserialize, Serialize};

/// Joules in one watt-hour.
pub const JOULES_PER_WH: f64 = 3600.0;

pub fn wh_to_joules(wh: f64) -> f64 {
    wh * JOULES_PER_WH
}

pub fn joules_to_wh(joules: f64) -> f64 {
    joules / JOULES_PER_WH
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmortizationReport {
    pub conversion_energy: f64,
    pub saving_per_invocation: f64,
    pub breakeven_invocations: Option<u64>,
    pub amortizable: bool,
}

/// Invocations needed before the per-invocation saving pays back the energy
/// spent on the conversion.
///
/// Both arguments are in joules. The breakeven `k` is the smallest count with
/// `k * saving >= conversion_energy`. Negative conversion energy is treated as
/// zero.
pub fn amortization(conversion_energy: f64, saving_per_invocation: f64) -> AmortizationReport {
    let c = conversion_energy.max(0.0);
    let s = saving_per_invocation;
    let breakeven = (s > 0.0).then(|| {
        let mut k = (c / s).ceil() as u64;
        // Division rounding can leave `k` one off either way.
        while (k as f64) * s < c {
            k += 1;
        }
        while k > 0 && ((k - 1) as f64) * s >= c {
            k -= 1;
        }
        k
    });
    AmortizationReport {
        conversion_energy: c,
        saving_per_invocation: s,
        amortizable: breakeven.is_some(),
        breakeven_invocations: breakeven,
    }
}
