use std::collections::HashSet;
use std::fs;
use std::io::{self, Cursor, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{DateTime, ZipArchive, ZipWriter};

use super::pointer;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("malformed test file `{name}`: {reason}")]
    MalformedTestFile { name: String, reason: String },
    #[error("test suite is empty")]
    EmptySuite,
    #[error("duplicate test case `{0}`")]
    DuplicateCase(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How the value at one JSON pointer in the actual output is judged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MatchMode {
    /// Compare exactly (numeric tolerance disabled below this path).
    Exact,
    /// Only require the value to exist.
    Present,
    /// Require a string matching the regular expression.
    Pattern { pattern: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOverride {
    pub path: String,
    #[serde(flatten)]
    pub mode: MatchMode,
}

/// One black-box test: an input event and the response it must produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub name: String,
    pub input_event: Value,
    pub expected_output: Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub match_overrides: Vec<MatchOverride>,
}

/// Ordered, non-empty list of uniquely named test cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    cases: Vec<TestCase>,
}

impl TestSuite {
    pub fn new(cases: Vec<TestCase>) -> Result<Self, SuiteError> {
        if cases.is_empty() {
            return Err(SuiteError::EmptySuite);
        }
        let mut seen = HashSet::new();
        for case in &cases {
            if !seen.insert(case.name.as_str()) {
                return Err(SuiteError::DuplicateCase(case.name.clone()));
            }
            if let Some(bad) = case
                .match_overrides
                .iter()
                .find(|o| !pointer::is_valid(&o.path))
            {
                return Err(SuiteError::MalformedTestFile {
                    name: case.name.clone(),
                    reason: format!("`{}` is not a JSON pointer", bad.path),
                });
            }
        }
        Ok(Self { cases })
    }

    pub fn cases(&self) -> &[TestCase] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Input events in suite order.
    pub fn events(&self) -> Vec<Value> {
        self.cases.iter().map(|c| c.input_event.clone()).collect()
    }
}

/// On-disk test file layout.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TestFile {
    input: Value,
    expected: Value,
    #[serde(default, rename = "match", skip_serializing_if = "Vec::is_empty")]
    matches: Vec<MatchOverride>,
}

fn case_name(file_name: &str) -> &str {
    let base = file_name.rsplit('/').next().unwrap_or(file_name);
    base.strip_suffix(".json").unwrap_or(base)
}

/// Builds a suite from named JSON test files. Cases are ordered by file name.
pub fn parse_test_suite<I, N, B>(files: I) -> Result<TestSuite, SuiteError>
where
    I: IntoIterator<Item = (N, B)>,
    N: AsRef<str>,
    B: AsRef<[u8]>,
{
    let mut named: Vec<(String, B)> = files
        .into_iter()
        .map(|(n, b)| (n.as_ref().to_string(), b))
        .collect();
    named.sort_by(|a, b| a.0.cmp(&b.0));
    let mut cases = Vec::with_capacity(named.len());
    for (file_name, bytes) in named {
        let name = case_name(&file_name).to_string();
        let file: TestFile =
            serde_json::from_slice(bytes.as_ref()).map_err(|e| SuiteError::MalformedTestFile {
                name: file_name.clone(),
                reason: e.to_string(),
            })?;
        cases.push(TestCase {
            name,
            input_event: file.input,
            expected_output: file.expected,
            match_overrides: file.matches,
        });
    }
    TestSuite::new(cases)
}

/// Loads every `*.json` file in `dir` (non-recursive) as a test case.
pub fn load_test_suite_dir(dir: &Path) -> Result<TestSuite, SuiteError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.file_type()?.is_file() && name.ends_with(".json") {
            files.push((name, fs::read(entry.path())?));
        }
    }
    parse_test_suite(files)
}

/// Reads a zip of test files. Entries may sit at the root or under `tests/`;
/// everything that is not a `.json` file is ignored.
pub fn parse_test_archive(archive: &[u8]) -> Result<TestSuite, SuiteError> {
    let malformed = |reason: String| SuiteError::MalformedTestFile {
        name: "<archive>".into(),
        reason,
    };
    let mut zip = ZipArchive::new(Cursor::new(archive)).map_err(|e| malformed(e.to_string()))?;
    let mut files = Vec::new();
    for i in 0..zip.len() {
        let mut entry = zip.by_index(i).map_err(|e| malformed(e.to_string()))?;
        let name = entry.name().to_string();
        if entry.is_dir() || !name.ends_with(".json") {
            continue;
        }
        let rel = name.strip_prefix("tests/").unwrap_or(&name);
        if rel.contains('/') {
            continue;
        }
        let mut bytes = Vec::new();
        entry
            .read_to_end(&mut bytes)
            .map_err(|e| malformed(e.to_string()))?;
        files.push((rel.to_string(), bytes));
    }
    parse_test_suite(files)
}

/// Writes a suite as a zip of `tests/<name>.json` files.
pub fn serialize_test_archive(suite: &TestSuite) -> Result<Vec<u8>, SuiteError> {
    let options = SimpleFileOptions::default().last_modified_time(DateTime::default());
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    for case in suite.cases() {
        let file = TestFile {
            input: case.input_event.clone(),
            expected: case.expected_output.clone(),
            matches: case.match_overrides.clone(),
        };
        zip.start_file(format!("tests/{}.json", case.name), options)
            .map_err(io::Error::other)?;
        zip.write_all(&serde_json::to_vec_pretty(&file).expect("test file serializes"))?;
    }
    Ok(zip.finish().map_err(io::Error::other)?.into_inner())
}
