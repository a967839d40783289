use serde::{Deserialize, Serialize};

use super::{BenchError, BenchmarkReport};

/// Per-invocation energy saving of a translation. Positive means the
/// translated function uses less energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsRow {
    pub function: String,
    pub original_joules_per_invocation: f64,
    pub translated_joules_per_invocation: f64,
    pub saving: f64,
    /// Combined standard deviation of both means.
    pub saving_std: f64,
    /// Reduction relative to the original; absent when the original used no
    /// energy and the translation did.
    pub percent_reduction: Option<f64>,
}

pub fn savings_report(
    function: &str,
    original: &BenchmarkReport,
    translated: &BenchmarkReport,
) -> SavingsRow {
    let o = original.aggregate.joules_per_invocation;
    let t = translated.aggregate.joules_per_invocation;
    let saving = o.mean - t.mean;
    let percent_reduction = if o.mean != 0.0 {
        Some(100.0 * saving / o.mean)
    } else if saving == 0.0 {
        Some(0.0)
    } else {
        None
    };
    SavingsRow {
        function: function.to_string(),
        original_joules_per_invocation: o.mean,
        translated_joules_per_invocation: t.mean,
        saving,
        saving_std: o.std.hypot(t.std),
        percent_reduction,
    }
}

/// Savings table as CSV, one row per function.
pub fn savings_csv(rows: &[SavingsRow]) -> Result<String, BenchError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    for row in rows {
        out.serialize(row)?;
    }
    let bytes = out
        .into_inner()
        .map_err(|e| BenchError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Serialize)]
struct RepetitionRow<'a> {
    variant: &'a str,
    repetition: usize,
    joules_total: f64,
    joules_per_invocation: f64,
    cpu_seconds: f64,
    peak_memory: f64,
    wall_time: f64,
    cold_start: f64,
}

/// Per-repetition measurements of labelled reports as CSV, for plotting.
pub fn repetitions_csv(reports: &[(&str, &BenchmarkReport)]) -> Result<String, BenchError> {
    let mut out = csv::Writer::from_writer(Vec::new());
    for (variant, report) in reports {
        for (i, r) in report.per_repetition.iter().enumerate() {
            out.serialize(RepetitionRow {
                variant,
                repetition: i + 1,
                joules_total: r.joules_total,
                joules_per_invocation: r.joules_per_invocation,
                cpu_seconds: r.cpu_seconds,
                peak_memory: r.peak_memory,
                wall_time: r.wall_time,
                cold_start: r.cold_start,
            })?;
        }
    }
    let bytes = out
        .into_inner()
        .map_err(|e| BenchError::Csv(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
