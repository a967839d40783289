use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RunnerError;
use crate::llm::CodeSyntax;
use crate::model::{DeploymentPackage, LanguageId, Manifest, PackageError};

/// When a build counts as successful.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessPredicate {
    /// Every step exits 0 and every required artifact exists.
    ExitZero,
    /// As `exit-zero`, and no step wrote to stderr.
    ExitZeroQuiet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildSection {
    /// Commands run in order inside the sandbox. `{entrypoint}` expands to
    /// the manifest entrypoint.
    pub steps: Vec<Vec<String>>,
    #[serde(default = "default_build_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_success")]
    pub success: SuccessPredicate,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
}

fn default_build_timeout() -> u64 {
    120
}

fn default_success() -> SuccessPredicate {
    SuccessPredicate::ExitZero
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ArtifactSection {
    /// Files that must exist after a successful build.
    #[serde(default)]
    pub required: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSection {
    /// Process started once per invocation, cwd = artifact root. A leading
    /// `./` is resolved against the artifact root.
    pub command: Vec<String>,
    #[serde(default)]
    pub env: BTreeMap<String, String>,
}

/// Files wrapped around a single translated source file to form a package.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaffoldSection {
    pub entrypoint: String,
    #[serde(default)]
    pub files: BTreeMap<String, String>,
    #[serde(default)]
    pub build_config: BTreeMap<String, String>,
}

/// Builder + invocation adapter for one language, declared in a profile file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterProfile {
    pub language: LanguageId,
    pub syntax: CodeSyntax,
    pub build: BuildSection,
    #[serde(default)]
    pub artifact: ArtifactSection,
    pub run: RunSection,
    pub scaffold: ScaffoldSection,
}

impl AdapterProfile {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Packages one source file as a deployable package of this language.
    pub fn scaffold(&self, source: &str) -> Result<DeploymentPackage, PackageError> {
        let mut files: BTreeMap<String, Vec<u8>> = self
            .scaffold
            .files
            .iter()
            .map(|(k, v)| (k.clone(), v.as_bytes().to_vec()))
            .collect();
        let mut text = source.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        files.insert(self.scaffold.entrypoint.clone(), text.into_bytes());
        let mut manifest = Manifest::new(self.language.clone(), self.scaffold.entrypoint.clone());
        manifest.build_config = self.scaffold.build_config.clone();
        DeploymentPackage::new(manifest, files)
    }
}

pub(crate) fn expand(arg: &str, entrypoint: &str) -> String {
    arg.replace("{entrypoint}", entrypoint)
}

const BUILTIN: &[&str] = &[
    include_str!("../../../../adapters/python.toml"),
    include_str!("../../../../adapters/go.toml"),
];

/// Adapter profiles by language. Each registered language has exactly one
/// profile, which carries both its builder and its invocation adapter.
#[derive(Debug, Clone, Default)]
pub struct LanguageRegistry {
    profiles: BTreeMap<LanguageId, AdapterProfile>,
}

impl LanguageRegistry {
    pub fn builtin() -> Self {
        let mut registry = Self::default();
        for text in BUILTIN {
            registry
                .register(AdapterProfile::from_toml(text).expect("bundled adapter profile parses"));
        }
        registry
    }

    /// Registers a profile, replacing any previous one for the language.
    pub fn register(&mut self, profile: AdapterProfile) {
        self.profiles.insert(profile.language.clone(), profile);
    }

    /// Adds every `*.toml` profile in `dir`.
    pub fn load_dir(&mut self, dir: &Path) -> Result<(), RunnerError> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("toml") {
                continue;
            }
            let text = fs::read_to_string(&path)?;
            let profile = AdapterProfile::from_toml(&text)
                .map_err(|e| RunnerError::InvalidProfile(format!("{}: {e}", path.display())))?;
            self.register(profile);
        }
        Ok(())
    }

    pub fn get(&self, language: &LanguageId) -> Result<&AdapterProfile, RunnerError> {
        self.profiles
            .get(language)
            .ok_or_else(|| RunnerError::AdapterMissing(language.clone()))
    }

    pub fn contains(&self, language: &LanguageId) -> bool {
        self.profiles.contains_key(language)
    }

    pub fn languages(&self) -> Vec<LanguageId> {
        self.profiles.keys().cloned().collect()
    }
}
