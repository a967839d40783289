use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Llm,
    Build,
    Test,
    Gate,
    Benchmark,
}

impl StageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Llm => "llm",
            Self::Build => "build",
            Self::Test => "test",
            Self::Gate => "gate",
            Self::Benchmark => "benchmark",
        }
    }
}

impl std::fmt::Display for StageKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What happens once a stage fails.
///
/// Written as `abort`, `accept-original` or `{recover: <stage>}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "OnFailRepr", try_from = "OnFailRepr")]
pub enum OnFail {
    /// Run the named stage, then resume.
    Recover(String),
    /// Retry while attempts remain, then stop and keep the original.
    Abort,
    /// Retry while attempts remain, then finish successfully with the
    /// original package.
    AcceptOriginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub name: String,
    pub kind: StageKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_template: Option<String>,
    pub max_attempts: u32,
    #[serde(default = "default_on_fail")]
    pub on_fail: OnFail,
    /// Only entered through a `recover` edge; skipped in forward order.
    #[serde(default)]
    pub recovery: bool,
    /// Stage to continue with after this recovery stage passes. Defaults to
    /// the stage whose failure led here.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub then: Option<String>,
    /// Allowed relative energy increase, for benchmark stages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum OnFailRepr {
    Word(String),
    Recover { recover: String },
}

impl From<OnFail> for OnFailRepr {
    fn from(v: OnFail) -> Self {
        match v {
            OnFail::Recover(recover) => Self::Recover { recover },
            OnFail::Abort => Self::Word("abort".into()),
            OnFail::AcceptOriginal => Self::Word("accept-original".into()),
        }
    }
}

impl TryFrom<OnFailRepr> for OnFail {
    type Error = String;

    fn try_from(v: OnFailRepr) -> Result<Self, String> {
        match v {
            OnFailRepr::Recover { recover } => Ok(Self::Recover(recover)),
            OnFailRepr::Word(w) => match w.as_str() {
                "abort" => Ok(Self::Abort),
                "accept-original" => Ok(Self::AcceptOriginal),
                _ => Err(format!("unknown on_fail `{w}`, expected abort, accept-original or {{recover: <stage>}}")),
            },
        }
    }
}

fn default_on_fail() -> OnFail {
    OnFail::Abort
}

impl StageSpec {
    pub fn new(name: impl Into<String>, kind: StageKind, max_attempts: u32) -> Self {
        Self {
            name: name.into(),
            kind,
            model: None,
            temperature: None,
            prompt_template: None,
            max_attempts,
            on_fail: OnFail::Abort,
            recovery: false,
            then: None,
            margin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    #[serde(default = "default_model")]
    pub model: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_output_tokens")]
    pub max_output_tokens: u32,
}

fn default_model() -> String {
    "default".to_string()
}

fn default_temperature() -> f64 {
    0.1
}

fn default_max_output_tokens() -> u32 {
    4096
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            model: default_model(),
            temperature: default_temperature(),
            max_output_tokens: default_max_output_tokens(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressionGate {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub margin: f64,
}

fn yes() -> bool {
    true
}

/// Verification steps around the stage list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Gates {
    /// Run the original function against the suite before any model call.
    #[serde(default)]
    pub precheck: bool,
    /// Abort when the translation uses more energy per invocation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression: Option<RegressionGate>,
}

pub const PRECHECK_STAGE: &str = "precheck";
pub const REGRESSION_STAGE: &str = "regression";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub name: String,
    pub stages: Vec<StageSpec>,
    pub global_attempt_budget: u32,
    #[serde(default)]
    pub defaults: Defaults,
    #[serde(default)]
    pub gates: Gates,
}

impl PipelineSpec {
    /// Stages in execution order with the enabled gates in place: the
    /// precheck first, the regression gate last.
    pub fn plan(&self) -> Vec<StageSpec> {
        let mut plan = Vec::with_capacity(self.stages.len() + 2);
        if self.gates.precheck {
            plan.push(StageSpec::new(PRECHECK_STAGE, StageKind::Gate, 1));
        }
        plan.extend(self.stages.iter().cloned());
        if let Some(r) = self.gates.regression.as_ref().filter(|r| r.enabled) {
            plan.push(StageSpec {
                on_fail: OnFail::AcceptOriginal,
                margin: Some(r.margin),
                ..StageSpec::new(REGRESSION_STAGE, StageKind::Benchmark, 1)
            });
        }
        plan
    }

    /// Upper bound on stage executions of one run.
    pub fn max_executions(&self) -> u32 {
        self.plan().iter().map(|s| s.max_attempts).sum()
    }

    pub fn stage(&self, name: &str) -> Option<&StageSpec> {
        self.stages.iter().find(|s| s.name == name)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        let schema = |field: String| Err(PipelineError::SchemaError(field));
        if self.name.trim().is_empty() {
            return schema("name".into());
        }
        if self.stages.is_empty() {
            return schema("stages".into());
        }
        if self.global_attempt_budget == 0 {
            return schema("global_attempt_budget".into());
        }
        if !(0.0..=2.0).contains(&self.defaults.temperature) {
            return schema("defaults.temperature".into());
        }
        if self
            .gates
            .regression
            .as_ref()
            .is_some_and(|r| r.margin.is_nan() || r.margin < 0.0)
        {
            return schema("gates.regression.margin".into());
        }
        let plan = self.plan();
        let mut names = HashSet::new();
        for s in &plan {
            if !names.insert(s.name.as_str()) {
                return schema(format!("stages.{}.name", s.name));
            }
        }
        for s in &self.stages {
            let field = |f: &str| format!("stages.{}.{f}", s.name);
            if s.name.trim().is_empty() {
                return schema("stages.name".into());
            }
            if s.max_attempts == 0 {
                return schema(field("max_attempts"));
            }
            if s.temperature.is_some_and(|t| !(0.0..=2.0).contains(&t)) {
                return schema(field("temperature"));
            }
            if s.kind == StageKind::Llm && s.prompt_template.is_none() {
                return schema(field("prompt_template"));
            }
            if let OnFail::Recover(target) = &s.on_fail {
                if target == &s.name {
                    return Err(PipelineError::UnboundedRecovery(format!(
                        "stage `{}` recovers to itself",
                        s.name
                    )));
                }
                if !names.contains(target.as_str()) {
                    return schema(field("on_fail.recover"));
                }
            }
            if let Some(then) = &s.then {
                if !s.recovery {
                    return schema(field("then"));
                }
                if !names.contains(then.as_str()) {
                    return schema(field("then"));
                }
            }
        }
        if self.stages.iter().all(|s| s.recovery) {
            return schema("stages".into());
        }
        let needed = self.max_executions();
        if needed > self.global_attempt_budget {
            let recovers = self
                .stages
                .iter()
                .any(|s| matches!(s.on_fail, OnFail::Recover(_)));
            let why = format!(
                "stages allow up to {needed} executions but the budget is {}",
                self.global_attempt_budget
            );
            return Err(if recovers {
                PipelineError::UnboundedRecovery(why)
            } else {
                PipelineError::SchemaError(format!("global_attempt_budget: {why}"))
            });
        }
        Ok(())
    }
}

/// Parses and validates a pipeline document (YAML; JSON is accepted too).
pub fn load_pipeline_spec(text: &str) -> Result<PipelineSpec, PipelineError> {
    let spec: PipelineSpec =
        serde_yaml::from_str(text).map_err(|e| PipelineError::SchemaError(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

const PRESETS: &[&str] = &[
    include_str!("../../../../pipelines/cot.pipeline.yaml"),
    include_str!("../../../../pipelines/creative-cot.pipeline.yaml"),
    include_str!("../../../../pipelines/single-shot.pipeline.yaml"),
];

/// Named pipeline specs.
#[derive(Debug, Clone, Default)]
pub struct PipelineCatalog {
    specs: BTreeMap<String, PipelineSpec>,
}

impl PipelineCatalog {
    /// The bundled presets: `cot`, `creative-cot` and `single-shot`.
    pub fn builtin() -> Self {
        let mut catalog = Self::default();
        for text in PRESETS {
            catalog.insert(load_pipeline_spec(text).expect("bundled pipeline parses"));
        }
        catalog
    }

    pub fn insert(&mut self, spec: PipelineSpec) {
        self.specs.insert(spec.name.clone(), spec);
    }

    /// Adds every `*.pipeline.yaml` in `dir`.
    pub fn load_dir(&mut self, dir: &Path) -> Result<(), PipelineError> {
        let entries = fs::read_dir(dir).map_err(|e| PipelineError::Io(e.to_string()))?;
        for entry in entries {
            let path = entry.map_err(|e| PipelineError::Io(e.to_string()))?.path();
            let is_pipeline = path
                .file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(".pipeline.yaml") || n.ends_with(".pipeline.yml"));
            if is_pipeline {
                let text =
                    fs::read_to_string(&path).map_err(|e| PipelineError::Io(e.to_string()))?;
                self.insert(load_pipeline_spec(&text)?);
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&PipelineSpec, PipelineError> {
        self.specs
            .get(name)
            .ok_or_else(|| PipelineError::UnknownPipeline(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.specs.keys().map(String::as_str).collect()
    }
}
