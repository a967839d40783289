use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use super::engine::{BenchmarkPair, JobContext, StageExecutor, StageResult};
use super::spec::StageSpec;
use super::ExecutorRegistry;
use super::StageKind;
use crate::bench::{run_benchmark, BenchmarkConfig};
use crate::energy::{regression_gate, EnergyProbe, ProbeLeases};
use crate::llm::{extract_code, CallTag, LlmGateway, LlmRequest, TemplateOutput, TemplateStore};
use crate::runner::{
    run_suite, Artifact, Builder, FunctionInvoker, InvokeLimits, LanguageRegistry, Toolchain,
    ValidationSummary,
};

/// Renders the stage's prompt template, calls the model and installs the
/// extracted code as the new candidate (or the text as documentation).
pub struct LlmExecutor {
    pub gateway: Arc<LlmGateway>,
    pub templates: Arc<TemplateStore>,
    pub languages: Arc<LanguageRegistry>,
}

impl LlmExecutor {
    fn bindings(ctx: &JobContext) -> BTreeMap<&'static str, String> {
        let source = ctx.source_code();
        let current = ctx
            .candidate
            .as_ref()
            .map(|c| c.source.clone())
            .unwrap_or_default();
        BTreeMap::from([
            ("source_language", ctx.spec.source_language().to_string()),
            ("target_language", ctx.spec.target_language.to_string()),
            (
                "documented_code",
                ctx.documented.clone().unwrap_or_else(|| source.clone()),
            ),
            ("original_code", source.clone()),
            ("source_code", source),
            ("current_code", current),
            (
                "error_output",
                ctx.last_error.clone().unwrap_or_else(|| "(none)".into()),
            ),
        ])
    }
}

impl StageExecutor for LlmExecutor {
    fn execute(&self, stage: &StageSpec, ctx: &mut JobContext, attempt: u32) -> StageResult {
        let template_id = stage.prompt_template.as_deref().unwrap_or(&stage.name);
        let template = match self.templates.get(template_id) {
            Ok(t) => t,
            Err(e) => return StageResult::fail(e.to_string()),
        };
        let bindings = Self::bindings(ctx);
        let borrowed: BTreeMap<&str, String> = bindings.into_iter().collect();
        let prompt = match crate::llm::render(template, &borrowed) {
            Ok(p) => p,
            Err(e) => return StageResult::fail(e.to_string()),
        };
        let model = stage
            .model
            .clone()
            .unwrap_or_else(|| ctx.defaults.model.clone());
        let temperature = stage.temperature.unwrap_or(ctx.defaults.temperature);
        let request =
            match LlmRequest::new(model, temperature, prompt, ctx.defaults.max_output_tokens) {
                Ok(r) => r,
                Err(e) => return StageResult::fail(e.to_string()),
            };
        let exchange = match self
            .gateway
            .complete(&request, &CallTag::new(template_id, attempt))
        {
            Ok(ex) => ex,
            Err(e) => return StageResult::fail(e.to_string()),
        };
        let response = exchange.response_text.clone();

        match template.output {
            TemplateOutput::Text => {
                let text = self
                    .languages
                    .get(ctx.spec.source_language())
                    .ok()
                    .and_then(|p| extract_code(&response, &p.syntax).ok())
                    .unwrap_or_else(|| response.trim().to_string());
                if text.is_empty() {
                    return StageResult::fail("empty response").with_exchange(exchange);
                }
                ctx.documented = Some(text.clone());
                StageResult::pass(format!(
                    "{} lines of documented source",
                    text.lines().count()
                ))
                .with_artifact("documented_source", text)
                .with_exchange(exchange)
            }
            TemplateOutput::Code => {
                let profile = match self.languages.get(&ctx.spec.target_language) {
                    Ok(p) => p,
                    Err(e) => return StageResult::fail(e.to_string()).with_exchange(exchange),
                };
                let code = match extract_code(&response, &profile.syntax) {
                    Ok(c) => c,
                    Err(e) => return StageResult::fail(e.to_string()).with_exchange(exchange),
                };
                let package = match profile.scaffold(&code) {
                    Ok(p) => p,
                    Err(e) => return StageResult::fail(e.to_string()).with_exchange(exchange),
                };
                let rev = ctx.set_candidate(code.clone(), package);
                StageResult::pass(format!("candidate revision {rev}"))
                    .with_artifact("candidate_source", code)
                    .with_exchange(exchange)
            }
        }
    }
}

/// Builds the current candidate in a fresh sandbox.
pub struct BuildExecutor {
    pub builder: Arc<dyn Builder>,
}

impl StageExecutor for BuildExecutor {
    fn execute(&self, _: &StageSpec, ctx: &mut JobContext, _: u32) -> StageResult {
        let Some(candidate) = ctx.candidate.clone() else {
            return StageResult::fail("no candidate to build");
        };
        let dir = ctx.sandbox("build");
        match self.builder.build(&candidate.package, &dir) {
            Ok(result) if result.ok => {
                let artifact = result.artifact.expect("successful build has an artifact");
                ctx.built = Some((candidate.rev, artifact));
                StageResult::pass(format!(
                    "built revision {} in {:.2} s",
                    candidate.rev, result.duration
                ))
            }
            Ok(result) => {
                ctx.last_error = Some(result.stderr.clone());
                StageResult::fail(result.stderr.clone()).with_artifact("build_log", result.stderr)
            }
            Err(e) => {
                ctx.last_error = Some(e.to_string());
                StageResult::fail(e.to_string())
            }
        }
    }
}

fn failure_report(suite: &crate::model::TestSuite, summary: &ValidationSummary) -> String {
    let mut out = String::new();
    for (case, result) in suite.cases().iter().zip(&summary.per_case) {
        if result.verdict.equal {
            continue;
        }
        let _ = writeln!(out, "test `{}`", case.name);
        let _ = writeln!(out, "  input:    {}", case.input_event);
        let _ = writeln!(out, "  expected: {}", case.expected_output);
        match &result.record.output {
            Some(actual) => {
                let _ = writeln!(out, "  actual:   {actual}");
            }
            None => {
                let _ = writeln!(out, "  actual:   (no response)");
            }
        }
        for m in &result.verdict.mismatches {
            let path = if m.path.is_empty() { "/" } else { &m.path };
            let _ = writeln!(out, "  {path}: {:?} {}", m.kind, m.detail);
        }
    }
    out
}

/// Runs the black-box suite against the artifact of the current candidate.
pub struct TestExecutor {
    pub invoker: Arc<dyn FunctionInvoker>,
    pub limits: InvokeLimits,
    pub tolerance: f64,
}

impl StageExecutor for TestExecutor {
    fn execute(&self, _: &StageSpec, ctx: &mut JobContext, _: u32) -> StageResult {
        let (Some(rev), Some(artifact)) = (ctx.candidate_rev(), ctx.current_artifact().cloned())
        else {
            return StageResult::fail("the current candidate has not been built");
        };
        let summary = run_suite(
            &artifact,
            &ctx.spec.suite,
            self.invoker.as_ref(),
            &self.limits,
            self.tolerance,
        );
        let report = serde_json::to_string_pretty(&summary).unwrap_or_default();
        let detail = format!(
            "{}/{} tests passed",
            summary.tests_passed, summary.tests_total
        );
        let passed = summary.validation;
        if !passed {
            ctx.last_error = Some(failure_report(&ctx.spec.suite, &summary));
        }
        ctx.tested = Some((rev, summary));
        let result = if passed {
            StageResult::pass(detail)
        } else {
            StageResult::fail(detail)
        };
        result.with_artifact("test_report", report)
    }
}

fn ensure_original(builder: &dyn Builder, ctx: &mut JobContext) -> Result<Artifact, String> {
    if let Some(a) = &ctx.original_artifact {
        return Ok(a.clone());
    }
    let dir = ctx.sandbox("original");
    match builder.build(&ctx.spec.source_package, &dir) {
        Ok(r) if r.ok => {
            let artifact = r.artifact.expect("successful build has an artifact");
            ctx.original_artifact = Some(artifact.clone());
            Ok(artifact)
        }
        Ok(r) => Err(format!("original does not build: {}", r.stderr)),
        Err(e) => Err(format!("original does not build: {e}")),
    }
}

/// Checks that the original function passes its own suite.
pub struct PrecheckExecutor {
    pub builder: Arc<dyn Builder>,
    pub invoker: Arc<dyn FunctionInvoker>,
    pub limits: InvokeLimits,
    pub tolerance: f64,
}

impl StageExecutor for PrecheckExecutor {
    fn execute(&self, _: &StageSpec, ctx: &mut JobContext, _: u32) -> StageResult {
        let artifact = match ensure_original(self.builder.as_ref(), ctx) {
            Ok(a) => a,
            Err(e) => return StageResult::fail(e),
        };
        let summary = run_suite(
            &artifact,
            &ctx.spec.suite,
            self.invoker.as_ref(),
            &self.limits,
            self.tolerance,
        );
        let passed = summary.validation;
        let detail = if passed {
            format!(
                "original passes {}/{} tests",
                summary.tests_passed, summary.tests_total
            )
        } else {
            format!(
                "original passes only {}/{} of its own tests\n{}",
                summary.tests_passed,
                summary.tests_total,
                failure_report(&ctx.spec.suite, &summary)
            )
        };
        ctx.original_validation = Some(summary);
        if passed {
            StageResult::pass(detail)
        } else {
            StageResult::fail(detail)
        }
    }
}

/// Benchmarks original and candidate and applies the regression gate.
pub struct BenchmarkExecutor {
    pub builder: Arc<dyn Builder>,
    pub invoker: Arc<dyn FunctionInvoker>,
    pub probe: Arc<dyn EnergyProbe>,
    pub leases: Arc<ProbeLeases>,
    pub limits: InvokeLimits,
    pub warmup_invocations: u32,
}

impl StageExecutor for BenchmarkExecutor {
    fn execute(&self, stage: &StageSpec, ctx: &mut JobContext, _: u32) -> StageResult {
        let (Some(rev), Some(translated)) = (ctx.candidate_rev(), ctx.current_artifact().cloned())
        else {
            return StageResult::fail("the current candidate has not been built");
        };
        let original = match ensure_original(self.builder.as_ref(), ctx) {
            Ok(a) => a,
            Err(e) => return StageResult::fail(e),
        };
        let cfg = BenchmarkConfig {
            invocations: ctx.spec.benchmark_invocations,
            repetitions: ctx.spec.benchmark_repetitions,
            warmup_invocations: self.warmup_invocations,
            probe: self.probe.id().to_string(),
            limits: self.limits,
        };
        let events = ctx.spec.suite.events();
        let run = |artifact: &Artifact| {
            run_benchmark(
                artifact,
                &events,
                &cfg,
                self.invoker.as_ref(),
                self.probe.as_ref(),
                &self.leases,
            )
        };
        let (orig, trans) = match (run(&original), run(&translated)) {
            (Ok(o), Ok(t)) => (o, t),
            (Err(e), _) => return StageResult::fail(format!("original benchmark failed: {e}")),
            (_, Err(e)) => return StageResult::fail(format!("translated benchmark failed: {e}")),
        };
        let gate = regression_gate(&orig.stats(), &trans.stats(), stage.margin.unwrap_or(0.0));
        let detail = format!(
            "translated {:.6} J/inv vs original {:.6} J/inv ({})",
            gate.translated_joules_per_invocation,
            gate.original_joules_per_invocation,
            if gate.pass {
                "no regression"
            } else {
                "regression"
            }
        );
        let passed = gate.pass;
        let pair = BenchmarkPair {
            rev,
            original: orig,
            translated: trans,
            gate,
        };
        let report = serde_json::to_string_pretty(&pair).unwrap_or_default();
        ctx.benchmarks = Some(pair);
        let result = if passed {
            StageResult::pass(detail)
        } else {
            StageResult::fail(detail)
        };
        result.with_artifact("benchmark_report", report)
    }
}

/// Shared services from which the standard executor set is built.
pub struct StandardExecutors {
    pub gateway: Arc<LlmGateway>,
    pub templates: Arc<TemplateStore>,
    pub languages: Arc<LanguageRegistry>,
    pub invoker: Arc<dyn FunctionInvoker>,
    pub probe: Arc<dyn EnergyProbe>,
    pub leases: Arc<ProbeLeases>,
    pub limits: InvokeLimits,
    pub tolerance: f64,
    pub warmup_invocations: u32,
}

impl StandardExecutors {
    pub fn registry(self) -> ExecutorRegistry {
        let builder: Arc<dyn Builder> = Arc::new(Toolchain::new(self.languages.clone()));
        ExecutorRegistry::new()
            .register(
                StageKind::Llm,
                Arc::new(LlmExecutor {
                    gateway: self.gateway,
                    templates: self.templates,
                    languages: self.languages,
                }),
            )
            .register(
                StageKind::Build,
                Arc::new(BuildExecutor {
                    builder: builder.clone(),
                }),
            )
            .register(
                StageKind::Test,
                Arc::new(TestExecutor {
                    invoker: self.invoker.clone(),
                    limits: self.limits,
                    tolerance: self.tolerance,
                }),
            )
            .register(
                StageKind::Gate,
                Arc::new(PrecheckExecutor {
                    builder: builder.clone(),
                    invoker: self.invoker.clone(),
                    limits: self.limits,
                    tolerance: self.tolerance,
                }),
            )
            .register(
                StageKind::Benchmark,
                Arc::new(BenchmarkExecutor {
                    builder,
                    invoker: self.invoker,
                    probe: self.probe,
                    leases: self.leases,
                    limits: self.limits,
                    warmup_invocations: self.warmup_invocations,
                }),
            )
    }
}
