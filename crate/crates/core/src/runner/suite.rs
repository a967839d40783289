use serde::{Deserialize, Serialize};

use super::build::Artifact;
use super::compare::{compare_json, ComparisonVerdict, Mismatch, MismatchKind};
use super::invoke::{FunctionInvoker, InvocationRecord, InvokeLimits};
use crate::model::TestSuite;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub name: String,
    pub verdict: ComparisonVerdict,
    pub record: InvocationRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub validation: bool,
    pub tests_passed: usize,
    pub tests_total: usize,
    pub per_case: Vec<CaseResult>,
}

impl ValidationSummary {
    pub fn records(&self) -> impl Iterator<Item = &InvocationRecord> {
        self.per_case.iter().map(|c| &c.record)
    }
}

/// Invokes every case once, in order, each in a fresh process, and judges the
/// responses. Invocation failures become failing verdicts.
pub fn run_suite(
    artifact: &Artifact,
    suite: &TestSuite,
    invoker: &dyn FunctionInvoker,
    limits: &InvokeLimits,
    tolerance: f64,
) -> ValidationSummary {
    let per_case: Vec<CaseResult> = suite
        .cases()
        .iter()
        .map(|case| {
            let record = invoker.invoke(artifact, &case.input_event, limits);
            let verdict = match (&record.output, &record.failure) {
                (Some(actual), None) => compare_json(
                    &case.expected_output,
                    actual,
                    &case.match_overrides,
                    tolerance,
                )
                .unwrap_or_else(|e| ComparisonVerdict {
                    equal: false,
                    mismatches: vec![Mismatch {
                        path: String::new(),
                        kind: MismatchKind::Pattern,
                        detail: e.to_string(),
                    }],
                }),
                (_, Some(failure)) => ComparisonVerdict::no_output(failure.to_string()),
                (None, None) => ComparisonVerdict::no_output("no output"),
            };
            CaseResult {
                name: case.name.clone(),
                verdict,
                record,
            }
        })
        .collect();
    let tests_passed = per_case.iter().filter(|c| c.verdict.equal).count();
    let tests_total = per_case.len();
    ValidationSummary {
        validation: tests_passed == tests_total,
        tests_passed,
        tests_total,
        per_case,
    }
}
