//! Paired function fixtures: one directory per function holding a
//! `function.toml`, one package directory per language and a `tests/` suite.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::model::{
    load_test_suite_dir, DeploymentPackage, LanguageId, PackageError, SuiteError, TestSuite,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Package { path: PathBuf, source: PackageError },
    #[error("{path}: {source}")]
    Suite { path: PathBuf, source: SuiteError },
    #[error("{path}: {reason}")]
    Meta { path: PathBuf, reason: String },
    #[error("no function `{0}` in the corpus")]
    UnknownFunction(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Deserialize)]
struct Meta {
    category: String,
    description: String,
    /// False for functions whose output depends on external services.
    #[serde(default = "yes")]
    ci: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone)]
pub struct CorpusFunction {
    pub id: String,
    pub category: String,
    pub description: String,
    pub ci: bool,
    pub packages: BTreeMap<LanguageId, DeploymentPackage>,
    pub suite: TestSuite,
    pub dir: PathBuf,
}

impl CorpusFunction {
    pub fn load(dir: &Path) -> Result<Self, CorpusError> {
        let meta_path = dir.join("function.toml");
        let meta: Meta =
            toml::from_str(&fs::read_to_string(&meta_path)?).map_err(|e| CorpusError::Meta {
                path: meta_path.clone(),
                reason: e.to_string(),
            })?;
        let mut packages = BTreeMap::new();
        let mut entries = fs::read_dir(dir)?.collect::<Result<Vec<_>, _>>()?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let path = entry.path();
            if path.is_dir() && path.join(crate::model::MANIFEST_FILE).is_file() {
                let pkg =
                    DeploymentPackage::from_dir(&path).map_err(|source| CorpusError::Package {
                        path: path.clone(),
                        source,
                    })?;
                packages.insert(pkg.language().clone(), pkg);
            }
        }
        let tests = dir.join("tests");
        let suite = load_test_suite_dir(&tests).map_err(|source| CorpusError::Suite {
            path: tests,
            source,
        })?;
        Ok(Self {
            id: dir
                .file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned(),
            category: meta.category,
            description: meta.description,
            ci: meta.ci,
            packages,
            suite,
            dir: dir.to_path_buf(),
        })
    }

    pub fn package(&self, language: &LanguageId) -> Option<&DeploymentPackage> {
        self.packages.get(language)
    }
}

/// Loads every function below `root`, ordered by directory name.
pub fn load_corpus(root: &Path) -> Result<Vec<CorpusFunction>, CorpusError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("function.toml").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| CorpusFunction::load(d)).collect()
}

/// Finds a function by full id (`f05_compound_interest`) or prefix (`f05`).
pub fn find_function<'a>(
    corpus: &'a [CorpusFunction],
    id: &str,
) -> Result<&'a CorpusFunction, CorpusError> {
    corpus
        .iter()
        .find(|f| f.id == id)
        .or_else(|| corpus.iter().find(|f| f.id.split('_').next() == Some(id)))
        .ok_or_else(|| CorpusError::UnknownFunction(id.to_string()))
}
